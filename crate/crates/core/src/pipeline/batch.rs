use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{build_scenario_with, run_chain, ManifestPartners, PartnerProvider, ScenarioConfig, ScenarioId};
use crate::par::{self, Workers};
use crate::{Error, Manifest, Result};

pub const OUTPUT_MANIFEST: &str = "manifest.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MIN_OUTPUT_SIZE: u32 = 32;

#[derive(Debug, Clone)]
pub struct AugmentJob {
    pub manifest: Manifest,
    pub scenario: ScenarioId,
    pub config: ScenarioConfig,
    pub copies: u32,
    pub global_seed: u64,
    pub output_dir: PathBuf,
    /// Side of the square network input.
    pub out_size: u32,
    pub workers: Workers,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FailedRecord {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentSummary {
    pub scenario: String,
    pub stages: Vec<String>,
    pub copies: u32,
    pub seed: u64,
    pub out_size: u32,
    pub records: usize,
    pub succeeded: usize,
    pub images_written: usize,
    pub failed: Vec<FailedRecord>,
    pub manifest: String,
    pub config: ScenarioConfig,
    /// Wall-clock measurements; the only field that varies between runs.
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub per_stage: Vec<StageTiming>,
    pub total_ms: f64,
}

struct RecordOutcome {
    rows: Vec<String>,
    timings: Vec<Duration>,
    error: Option<String>,
}

pub fn output_file_name(id: &str, copy: u32) -> String {
    format!("{id}_c{copy}.png")
}

/// Writes `copies` augmented PNGs per record, an output manifest with a
/// `copy` column and a JSON summary. Records that fail are listed in the
/// summary and skipped; the job itself only fails on output I/O.
pub fn augment_dataset(job: &AugmentJob) -> Result<AugmentSummary> {
    if job.copies < 1 {
        return Err(Error::InvalidParameter("copies must be >= 1".into()));
    }
    if job.out_size < MIN_OUTPUT_SIZE {
        return Err(Error::InvalidParameter(format!(
            "output size must be >= {MIN_OUTPUT_SIZE}, got {}",
            job.out_size
        )));
    }
    job.config.validate()?;
    std::fs::create_dir_all(&job.output_dir).map_err(|e| Error::io(&job.output_dir, e))?;

    let started = Instant::now();
    let chain = build_scenario_with(job.scenario, &job.config);
    let partners = ManifestPartners::new(&job.manifest);
    let provider: Option<&dyn PartnerProvider> = chain.needs_partner().then_some(&partners as _);
    let n_stages = chain.stages.len();

    let indices: Vec<usize> = (0..job.manifest.len()).collect();
    let outcomes = par::map(&indices, job.workers, |&i| {
        let mut timings = vec![Duration::ZERO; n_stages];
        let mut rows = Vec::new();
        let result = (|| -> Result<()> {
            let sample = job.manifest.load_sample(i)?;
            let mut written = Vec::with_capacity(job.copies as usize);
            for copy in 0..job.copies {
                let out = run_chain(
                    &chain,
                    &sample,
                    job.global_seed,
                    copy as u64,
                    job.out_size,
                    provider,
                    Some(&mut timings),
                )?;
                written.push((copy, out));
            }
            // Write only once every copy succeeded, so a failed record
            // leaves no partial output behind.
            for (copy, out) in written {
                let name = output_file_name(&sample.id, copy);
                out.image.save_png(job.output_dir.join(&name))?;
                rows.push(format!(
                    "{},{},,{},{}",
                    sample.id,
                    name,
                    u8::from(out.label),
                    copy
                ));
            }
            Ok(())
        })();
        RecordOutcome {
            rows,
            timings,
            error: result.err().map(|e| e.to_string()),
        }
    });

    let mut manifest_text = String::from("id,image,mask,label,copy\n");
    let mut failed = Vec::new();
    let mut stage_totals = vec![Duration::ZERO; n_stages];
    let mut images_written = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        for (t, d) in stage_totals.iter_mut().zip(&outcome.timings) {
            *t += *d;
        }
        match outcome.error {
            Some(error) => failed.push(FailedRecord {
                id: job.manifest.records[i].id.clone(),
                error,
            }),
            None => {
                images_written += outcome.rows.len();
                for row in outcome.rows {
                    manifest_text.push_str(&row);
                    manifest_text.push('\n');
                }
            }
        }
    }
    write_file(&job.output_dir.join(OUTPUT_MANIFEST), manifest_text.as_bytes())?;

    let summary = AugmentSummary {
        scenario: job.scenario.to_string(),
        stages: chain.kinds().iter().map(|k| k.name().to_string()).collect(),
        copies: job.copies,
        seed: job.global_seed,
        out_size: job.out_size,
        records: job.manifest.len(),
        succeeded: job.manifest.len() - failed.len(),
        images_written,
        failed,
        manifest: OUTPUT_MANIFEST.into(),
        config: job.config.clone(),
        timing: Timing {
            per_stage: chain
                .stages
                .iter()
                .zip(&stage_totals)
                .map(|(s, d)| StageTiming {
                    stage: s.kind.name().into(),
                    total_ms: d.as_secs_f64() * 1e3,
                })
                .collect(),
            total_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&job.output_dir.join(SUMMARY_FILE), json.as_bytes())?;
    Ok(summary)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
