//! `skinaug` command-line frontend.
//!
//! Exit status: 0 on success, 1 when arguments, config or inputs fail
//! validation, 2 when a run fails after validation.

mod font;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use skinaug::par::Workers;
use skinaug::pipeline::{
    apply_chain, augment_dataset, build_scenario_with, AugmentJob, ManifestPartners,
    PartnerProvider, ScenarioConfig,
};
use skinaug::tta_eval::{
    crops_144, evaluate, sample_subset, EvalConfig, EvalMode, PredictionTable, Predictor,
    ProcessPredictor, REFERENCE_SUBSET_SIZES, TEST_TTA_COPIES,
};
use skinaug::{ImageBuffer, Manifest, ScenarioId};

const RUN_FILE: &str = "run.json";

#[derive(Parser, Debug)]
#[command(name = "skinaug", version, about = "Deterministic skin-lesion augmentation and TTA evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write augmented copies of every manifest image
    Augment(AugmentArgs),
    /// Render a contact sheet of augmented copies of the first manifest image
    Preview(PreviewArgs),
    /// Write the 144 multi-scale crops of every manifest image
    Crops144(CropsArgs),
    /// Score a predictor on a manifest in original, tta or crops144 mode
    Eval(EvalArgs),
    /// Draw a seeded training subset from a manifest
    Subset(SubsetArgs),
    /// List the 13 scenarios and their stage chains
    Scenarios,
}

#[derive(Args, Debug)]
struct Common {
    /// Input manifest CSV (id,image,mask,label)
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Directory that receives every output of the run
    #[arg(long, value_name = "DIR")]
    output: PathBuf,
    /// Global seed for all random streams
    #[arg(long, value_name = "U64", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ChainArgs {
    /// Augmentation scenario, A to M
    #[arg(long, value_name = "A..M", default_value = "J", value_parser = parse_scenario)]
    scenario: ScenarioId,
    /// TOML file overriding the default stage parameters
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WorkerArgs {
    /// Worker threads; 0 picks automatically, 1 runs sequentially
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    chain: ChainArgs,
    /// Augmented copies per image
    #[arg(long, value_name = "N", default_value_t = 1)]
    copies: u32,
    /// Side of the square output images in pixels
    #[arg(long, value_name = "PX", default_value_t = 224)]
    size: u32,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Args, Debug)]
struct PreviewArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    chain: ChainArgs,
    /// Sheet layout as ROWSxCOLS
    #[arg(long, value_name = "RxC", default_value = "4x4", value_parser = parse_grid)]
    grid: (u32, u32),
    /// Side of each tile in pixels
    #[arg(long, value_name = "PX", default_value_t = 128)]
    size: u32,
}

#[derive(Args, Debug)]
struct CropsArgs {
    /// Input manifest CSV (id,image,mask,label)
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Directory that receives every output of the run
    #[arg(long, value_name = "DIR")]
    output: PathBuf,
    /// Network input size; crop scales follow proportionally
    #[arg(long, value_name = "PX", default_value_t = 224)]
    size: u32,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    chain: ChainArgs,
    /// Evaluation mode: original, tta or crops144
    #[arg(long, value_name = "MODE", default_value = "original", value_parser = parse_mode)]
    mode: EvalMode,
    /// Augmented copies averaged per image in tta mode
    #[arg(long, value_name = "N", default_value_t = TEST_TTA_COPIES)]
    copies: u32,
    /// Network input size in pixels
    #[arg(long, value_name = "PX", default_value_t = 224)]
    size: u32,
    /// Shell command reading image paths on stdin, writing probabilities on stdout
    #[arg(long, value_name = "CMD", conflicts_with = "predictions", required_unless_present = "predictions")]
    predictor: Option<String>,
    /// Precomputed predictions CSV (id,copy,probability)
    #[arg(long, value_name = "CSV")]
    predictions: Option<PathBuf>,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Args, Debug)]
struct SubsetArgs {
    #[command(flatten)]
    common: Common,
    /// Number of records to keep
    #[arg(long, value_name = "N")]
    subset_size: usize,
}

fn parse_scenario(s: &str) -> Result<ScenarioId, String> {
    ScenarioId::from_str(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<EvalMode, String> {
    EvalMode::from_str(s).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r: u32 = r.parse().map_err(|_| format!("bad row count {r:?}"))?;
    let c: u32 = c.parse().map_err(|_| format!("bad column count {c:?}"))?;
    if r == 0 || c == 0 || r * c > 1024 {
        return Err(format!("grid must have between 1 and 1024 tiles, got {s}"));
    }
    Ok((r, c))
}

/// Failure with its exit status.
enum Failure {
    Invalid(String),
    Runtime(String),
}

type Outcome<T> = Result<T, Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Augment(a) => augment(a),
        Command::Preview(a) => preview(a),
        Command::Crops144(a) => crops(a),
        Command::Eval(a) => eval(a),
        Command::Subset(a) => subset(a),
        Command::Scenarios => {
            scenarios();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {}", single_line(&msg));
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {}", single_line(&msg));
            ExitCode::from(2)
        }
    }
}

fn single_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load_manifest(path: &Path) -> Outcome<Manifest> {
    Manifest::load(path).map_err(invalid)
}

fn load_config(path: Option<&Path>) -> Outcome<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).map_err(invalid),
        None => Ok(ScenarioConfig::default()),
    }
}

fn create_output(dir: &Path) -> Outcome<()> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))
}

fn write_run(dir: &Path, value: serde_json::Value) -> Outcome<()> {
    let path = dir.join(RUN_FILE);
    let text = serde_json::to_string_pretty(&value).expect("json value serializes");
    std::fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn config_json(cfg: &ScenarioConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn augment(a: AugmentArgs) -> Outcome<()> {
    let manifest = load_manifest(&a.common.manifest)?;
    let config = load_config(a.chain.config.as_deref())?;
    if a.copies < 1 {
        return Err(invalid("--copies must be >= 1"));
    }
    if a.size < skinaug::pipeline::MIN_OUTPUT_SIZE {
        return Err(invalid(format!(
            "--size must be >= {}",
            skinaug::pipeline::MIN_OUTPUT_SIZE
        )));
    }
    if build_scenario_with(a.chain.scenario, &config).needs_partner()
        && manifest.records.iter().filter(|r| r.mask.is_some()).count() < 2
    {
        return Err(invalid(format!(
            "scenario {} needs at least two records with masks",
            a.chain.scenario
        )));
    }
    create_output(&a.common.output)?;
    write_run(
        &a.common.output,
        json!({
            "command": "augment",
            "manifest": a.common.manifest,
            "scenario": a.chain.scenario.to_string(),
            "copies": a.copies,
            "seed": a.common.seed,
            "size": a.size,
            "config": config_json(&config),
        }),
    )?;
    let job = AugmentJob {
        manifest,
        scenario: a.chain.scenario,
        config,
        copies: a.copies,
        global_seed: a.common.seed,
        output_dir: a.common.output.clone(),
        out_size: a.size,
        workers: Workers::from_count(a.workers.workers),
    };
    let summary = augment_dataset(&job).map_err(runtime)?;
    eprintln!(
        "augment: {} images from {}/{} records",
        summary.images_written, summary.succeeded, summary.records
    );
    match summary.failed.first() {
        Some(f) => Err(runtime(format!(
            "{} record(s) failed, first {}: {}",
            summary.failed.len(),
            f.id,
            f.error
        ))),
        None => Ok(()),
    }
}

fn preview(a: PreviewArgs) -> Outcome<()> {
    let manifest = load_manifest(&a.common.manifest)?;
    let config = load_config(a.chain.config.as_deref())?;
    if manifest.is_empty() {
        return Err(invalid("manifest has no records"));
    }
    if a.size < 16 {
        return Err(invalid("--size must be >= 16"));
    }
    let chain = build_scenario_with(a.chain.scenario, &config);
    let (rows, cols) = a.grid;
    create_output(&a.common.output)?;
    write_run(
        &a.common.output,
        json!({
            "command": "preview",
            "manifest": a.common.manifest,
            "scenario": a.chain.scenario.to_string(),
            "grid": format!("{rows}x{cols}"),
            "seed": a.common.seed,
            "size": a.size,
            "config": config_json(&config),
        }),
    )?;

    let sample = manifest.load_sample(0).map_err(runtime)?;
    let partners = ManifestPartners::new(&manifest);
    let provider: Option<&dyn PartnerProvider> = chain.needs_partner().then_some(&partners as _);
    let gap = 2;
    let tile = a.size;
    let sheet_w = cols * tile + (cols + 1) * gap;
    let sheet_h = rows * tile + (rows + 1) * gap;
    let mut data = vec![255u8; sheet_w as usize * sheet_h as usize * 3];
    let label_scale = (tile / 64).max(1);
    for k in 0..rows * cols {
        let out = apply_chain(&chain, &sample, a.common.seed, k as u64, tile, provider).map_err(runtime)?;
        let x0 = gap + (k % cols) * (tile + gap);
        let y0 = gap + (k / cols) * (tile + gap);
        for y in 0..tile {
            let src = &out.image.data()[(y * tile * 3) as usize..((y + 1) * tile * 3) as usize];
            let start = (((y0 + y) * sheet_w + x0) * 3) as usize;
            data[start..start + src.len()].copy_from_slice(src);
        }
        let text = format!("{}{}", a.chain.scenario, k);
        font::draw_label(&mut data, sheet_w, sheet_h, x0, y0, &text, label_scale);
    }
    let sheet = ImageBuffer::new(sheet_w, sheet_h, data).map_err(runtime)?;
    let path = a.common.output.join(format!("preview_{}.png", a.chain.scenario));
    sheet.save_png(&path).map_err(runtime)?;
    eprintln!("preview: {}", path.display());
    Ok(())
}

fn crops(a: CropsArgs) -> Outcome<()> {
    let manifest = load_manifest(&a.manifest)?;
    if a.size < 1 {
        return Err(invalid("--size must be >= 1"));
    }
    create_output(&a.output)?;
    write_run(
        &a.output,
        json!({
            "command": "crops144",
            "manifest": a.manifest,
            "size": a.size,
            "scales": skinaug::tta_eval::crop_scales(a.size),
        }),
    )?;
    let indices: Vec<usize> = (0..manifest.len()).collect();
    let results = skinaug::par::map(&indices, Workers::from_count(a.workers.workers), |&i| {
        let r = &manifest.records[i];
        let img = ImageBuffer::load(manifest.resolve(&r.image))?;
        let dir = a.output.join(&r.id);
        std::fs::create_dir_all(&dir).map_err(|e| skinaug::Error::io(&dir, e))?;
        for (k, c) in crops_144(&img, a.size)?.iter().enumerate() {
            c.save_png(dir.join(format!("crop_{k:03}.png")))?;
        }
        Ok::<_, skinaug::Error>(())
    });
    if let Some(e) = results.into_iter().find_map(Result::err) {
        return Err(runtime(e));
    }
    eprintln!("crops144: {} images x 144 crops", manifest.len());
    Ok(())
}

fn eval(a: EvalArgs) -> Outcome<()> {
    let manifest = load_manifest(&a.common.manifest)?;
    let config = load_config(a.chain.config.as_deref())?;
    if a.copies < 1 {
        return Err(invalid("--copies must be >= 1"));
    }
    if a.size < 1 {
        return Err(invalid("--size must be >= 1"));
    }
    let predictor: Box<dyn Predictor> = match (&a.predictor, &a.predictions) {
        (Some(cmd), None) => Box::new(ProcessPredictor::new(cmd.clone())),
        (None, Some(csv)) => Box::new(PredictionTable::load(csv).map_err(invalid)?),
        _ => return Err(invalid("pass exactly one of --predictor and --predictions")),
    };
    let cfg = EvalConfig {
        mode: a.mode,
        tta_copies: a.copies,
        scenario: a.chain.scenario,
        scenario_config: config.clone(),
        input_size: a.size,
        workers: Workers::from_count(a.workers.workers),
    };
    create_output(&a.common.output)?;
    write_run(
        &a.common.output,
        json!({
            "command": "eval",
            "manifest": a.common.manifest,
            "mode": a.mode,
            "scenario": a.chain.scenario.to_string(),
            "copies": cfg.copies(),
            "seed": a.common.seed,
            "size": a.size,
            "predictor": a.predictor,
            "predictions": a.predictions,
            "config": config_json(&config),
        }),
    )?;
    let report = evaluate(&manifest, predictor.as_ref(), &cfg, a.common.seed, Some(&a.common.output))
        .map_err(runtime)?;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "mode": report.mode,
            "scenario": report.scenario,
            "copies": report.copies,
            "seed": report.seed,
            "auc": report.auc,
            "n_samples": report.n_samples,
        }))
        .expect("json value serializes")
    );
    Ok(())
}

fn subset(a: SubsetArgs) -> Outcome<()> {
    let manifest = load_manifest(&a.common.manifest)?;
    if a.subset_size < 1 || a.subset_size > manifest.len() {
        return Err(invalid(format!(
            "--subset-size must lie in [1, {}], got {}",
            manifest.len(),
            a.subset_size
        )));
    }
    let mut picked = sample_subset(&manifest, a.subset_size, a.common.seed).map_err(runtime)?;
    // Rewrite paths so the subset manifest works from its new directory.
    for r in &mut picked.records {
        r.image = absolute(&manifest.resolve(&r.image));
        r.mask = r.mask.as_ref().map(|m| absolute(&manifest.resolve(m)));
    }
    create_output(&a.common.output)?;
    write_run(
        &a.common.output,
        json!({
            "command": "subset",
            "manifest": a.common.manifest,
            "subset_size": a.subset_size,
            "seed": a.common.seed,
            "reference_sizes": REFERENCE_SUBSET_SIZES,
        }),
    )?;
    picked.save(a.common.output.join("manifest.csv")).map_err(runtime)?;
    eprintln!("subset: {} of {} records", picked.len(), manifest.len());
    Ok(())
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).to_string_lossy().into_owned()
}

fn scenarios() {
    for id in ScenarioId::ALL {
        let chain = skinaug::build_scenario(id);
        let letters: Vec<String> = chain.kinds().iter().map(|k| k.scenario().to_string()).collect();
        let chain_text = if letters.is_empty() { "-".to_string() } else { letters.join(" -> ") };
        println!("{}  {:<40} {}", id, id.name(), chain_text);
    }
}
