use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{compute_auc, crops_144, Predictor};
use crate::imgcore::resize_to;
use crate::par::{self, Workers};
use crate::pipeline::{build_scenario_with, run_chain, ScenarioConfig, ScenarioId};
use crate::{Error, ImageBuffer, Manifest, Result, Sample};

pub const TEST_TTA_COPIES: u32 = 64;
pub const VALIDATION_TTA_COPIES: u32 = 16;
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// One prediction on the resized original.
    Original,
    /// Mean over augmented copies.
    Tta,
    /// Mean over the 144 multi-scale crops.
    Crops144,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Original => "original",
            EvalMode::Tta => "tta",
            EvalMode::Crops144 => "crops144",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(EvalMode::Original),
            "tta" => Ok(EvalMode::Tta),
            "crops144" => Ok(EvalMode::Crops144),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected original, tta or crops144)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub mode: EvalMode,
    /// Ignored unless `mode` is [`EvalMode::Tta`].
    pub tta_copies: u32,
    pub scenario: ScenarioId,
    pub scenario_config: ScenarioConfig,
    pub input_size: u32,
    pub workers: Workers,
}

impl EvalConfig {
    pub fn new(mode: EvalMode, scenario: ScenarioId, input_size: u32) -> Self {
        Self {
            mode,
            tta_copies: TEST_TTA_COPIES,
            scenario,
            scenario_config: ScenarioConfig::default(),
            input_size,
            workers: Workers::Auto,
        }
    }

    /// Number of predictions averaged per sample.
    pub fn copies(&self) -> u32 {
        match self.mode {
            EvalMode::Original => 1,
            EvalMode::Tta => self.tta_copies,
            EvalMode::Crops144 => super::CROP_COUNT as u32,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mode == EvalMode::Tta && self.tta_copies < 1 {
            return Err(Error::InvalidParameter("tta copies must be >= 1".into()));
        }
        if self.input_size < 1 {
            return Err(Error::InvalidParameter("input size must be >= 1".into()));
        }
        self.scenario_config.validate()
    }
}

/// Builds the images the predictor sees for one sample.
fn views(sample: &Sample, cfg: &EvalConfig, global_seed: u64) -> Result<Vec<ImageBuffer>> {
    match cfg.mode {
        EvalMode::Original => Ok(vec![resize_to(&sample.image, cfg.input_size, cfg.input_size)?]),
        EvalMode::Crops144 => crops_144(&sample.image, cfg.input_size),
        EvalMode::Tta => {
            let chain = build_scenario_with(cfg.scenario, &cfg.scenario_config).for_eval();
            (0..cfg.tta_copies)
                .map(|c| {
                    run_chain(&chain, sample, global_seed, c as u64, cfg.input_size, None, None)
                        .map(|s| s.image)
                })
                .collect()
        }
    }
}

/// Mean predicted probability over the views selected by `cfg.mode`.
/// Train-only stages are stripped before augmenting.
pub fn predict_tta(
    predictor: &dyn Predictor,
    sample: &Sample,
    cfg: &EvalConfig,
    global_seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let images = views(sample, cfg, global_seed)?;
    let probs = predictor.predict(&sample.id, &images)?;
    if probs.len() != images.len() {
        return Err(Error::Predictor {
            id: sample.id.clone(),
            copy: probs.len().min(images.len()),
            message: format!("expected {} predictions, got {}", images.len(), probs.len()),
        });
    }
    if let Some(k) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Predictor {
            id: sample.id.clone(),
            copy: k,
            message: format!("probability {} outside [0, 1]", probs[k]),
        });
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub label: bool,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub scenario: String,
    pub copies: u32,
    pub seed: u64,
    pub auc: Option<f64>,
    pub n_samples: usize,
    pub input_size: u32,
    /// `false` when a predictor failure cut the run short.
    pub complete: bool,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub predictions: Vec<PredictionRow>,
}

impl EvalReport {
    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("id,label,probability\n");
        for r in &self.predictions {
            out.push_str(&format!("{},{},{}\n", r.id, u8::from(r.label), r.probability));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join(PREDICTIONS_FILE);
        std::fs::write(&p, self.predictions_csv()).map_err(|e| Error::io(&p, e))?;
        let p = dir.join(REPORT_FILE);
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&p, json).map_err(|e| Error::io(&p, e))
    }
}

/// Predicts every record and scores the AUC. When `output_dir` is given the
/// per-sample CSV and JSON report are written there, including after a
/// failure, in which case the report is flagged incomplete and the first
/// error is returned.
pub fn evaluate(
    manifest: &Manifest,
    predictor: &dyn Predictor,
    cfg: &EvalConfig,
    global_seed: u64,
    output_dir: Option<&Path>,
) -> Result<EvalReport> {
    cfg.validate()?;
    let indices: Vec<usize> = (0..manifest.len()).collect();
    let results = par::map(&indices, cfg.workers, |&i| -> Result<PredictionRow> {
        let r = &manifest.records[i];
        let image = ImageBuffer::load(manifest.resolve(&r.image))?;
        let sample = Sample::new(r.id.clone(), image, None, r.label)?;
        let probability = predict_tta(predictor, &sample, cfg, global_seed)?;
        Ok(PredictionRow {
            id: r.id.clone(),
            label: r.label,
            probability,
        })
    });

    let mut predictions = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    let mut first_error = None;
    for res in results {
        match res {
            Ok(row) => predictions.push(row),
            Err(e) => {
                errors.push(e.to_string());
                first_error.get_or_insert(e);
            }
        }
    }

    let complete = first_error.is_none();
    let auc = if complete {
        let labels: Vec<bool> = predictions.iter().map(|r| r.label).collect();
        let scores: Vec<f64> = predictions.iter().map(|r| r.probability).collect();
        match compute_auc(&labels, &scores) {
            Ok(a) => Some(a),
            Err(e) => {
                first_error = Some(e);
                None
            }
        }
    } else {
        None
    };

    let report = EvalReport {
        mode: cfg.mode,
        scenario: cfg.scenario.to_string(),
        copies: cfg.copies(),
        seed: global_seed,
        auc,
        n_samples: predictions.len(),
        input_size: cfg.input_size,
        complete,
        errors,
        predictions,
    };
    if let Some(dir) = output_dir {
        report.write(dir)?;
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
