//! Scenario registry (A-M), chain application and batch augmentation.

mod batch;
mod config;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use self::batch::{
    augment_dataset, output_file_name, AugmentJob, AugmentSummary, FailedRecord, StageTiming,
    MIN_OUTPUT_SIZE, OUTPUT_MANIFEST, SUMMARY_FILE,
};
pub use self::config::{ElasticRanges, ScenarioConfig, CONFIG_VERSION, DEFAULT_CONFIG_TOML};

use crate::imgcore::resize_to;
use crate::{elastic, erasing, geometric, lesionmix};
use crate::{Error, Manifest, Result, RngStream, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
    M,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 13] = [
        ScenarioId::A,
        ScenarioId::B,
        ScenarioId::C,
        ScenarioId::D,
        ScenarioId::E,
        ScenarioId::F,
        ScenarioId::G,
        ScenarioId::H,
        ScenarioId::I,
        ScenarioId::J,
        ScenarioId::K,
        ScenarioId::L,
        ScenarioId::M,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::A => "No Augmentation",
            ScenarioId::B => "Saturation, Contrast, and Brightness",
            ScenarioId::C => "Saturation, Contrast, Brightness, and Hue",
            ScenarioId::D => "Affine",
            ScenarioId::E => "Flips",
            ScenarioId::F => "Random Crops",
            ScenarioId::G => "Random Erasing",
            ScenarioId::H => "Elastic",
            ScenarioId::I => "Lesion Mix",
            ScenarioId::J => "Basic Set",
            ScenarioId::K => "Basic Set + Erasing",
            ScenarioId::L => "Basic Set + Elastic",
            ScenarioId::M => "Basic Set + Mix",
        }
    }

    pub fn letter(self) -> char {
        (b'A' + ScenarioId::ALL.iter().position(|&s| s == self).unwrap() as u8) as char
    }

    /// Single-transform scenarios that make up the compositions.
    fn components(self) -> &'static [ScenarioId] {
        use ScenarioId::*;
        match self {
            A => &[],
            B | C | D | E | F | G | H | I => &[],
            J => &[F, D, E, C],
            K => &[F, G, D, E, C],
            L => &[F, D, H, E, C],
            M => &[I, F, D, E, C],
        }
    }

    fn single_stage(self) -> Option<StageKind> {
        match self {
            ScenarioId::B => Some(StageKind::ColorJitter { hue: false }),
            ScenarioId::C => Some(StageKind::ColorJitter { hue: true }),
            ScenarioId::D => Some(StageKind::Affine),
            ScenarioId::E => Some(StageKind::Flips),
            ScenarioId::F => Some(StageKind::RandomCrop),
            ScenarioId::G => Some(StageKind::RandomErasing),
            ScenarioId::H => Some(StageKind::Elastic),
            ScenarioId::I => Some(StageKind::LesionMix),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if ('A'..='M').contains(&c.to_ascii_uppercase()) => {
                Ok(ScenarioId::ALL[(c.to_ascii_uppercase() as u8 - b'A') as usize])
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown scenario {s:?} (expected one of A-M)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageKind {
    ColorJitter { hue: bool },
    Affine,
    Flips,
    RandomCrop,
    RandomErasing,
    Elastic,
    LesionMix,
}

impl StageKind {
    pub fn name(self) -> &'static str {
        match self {
            StageKind::ColorJitter { hue: false } => "ColorJitter",
            StageKind::ColorJitter { hue: true } => "ColorJitterWithHue",
            StageKind::Affine => "Affine",
            StageKind::Flips => "Flips",
            StageKind::RandomCrop => "RandomCrop",
            StageKind::RandomErasing => "RandomErasing",
            StageKind::Elastic => "Elastic",
            StageKind::LesionMix => "LesionMix",
        }
    }

    /// Scenario letter of the single-transform scenario for this stage.
    pub fn scenario(self) -> ScenarioId {
        match self {
            StageKind::ColorJitter { hue: false } => ScenarioId::B,
            StageKind::ColorJitter { hue: true } => ScenarioId::C,
            StageKind::Affine => ScenarioId::D,
            StageKind::Flips => ScenarioId::E,
            StageKind::RandomCrop => ScenarioId::F,
            StageKind::RandomErasing => ScenarioId::G,
            StageKind::Elastic => ScenarioId::H,
            StageKind::LesionMix => ScenarioId::I,
        }
    }

    /// Stages that move pixels invalidate the segmentation mask.
    fn keeps_mask(self) -> bool {
        matches!(
            self,
            StageKind::ColorJitter { .. } | StageKind::RandomErasing | StageKind::LesionMix
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub kind: StageKind,
    /// Dropped when the chain is instantiated for validation or test.
    pub train_only: bool,
}

/// Ordered stages of one scenario plus the parameter ranges they draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    pub scenario: ScenarioId,
    pub stages: Vec<Stage>,
    pub config: ScenarioConfig,
}

impl TransformChain {
    pub fn kinds(&self) -> Vec<StageKind> {
        self.stages.iter().map(|s| s.kind).collect()
    }

    /// Chain used at validation/test time: train-only stages removed.
    pub fn for_eval(&self) -> TransformChain {
        TransformChain {
            scenario: self.scenario,
            stages: self.stages.iter().copied().filter(|s| !s.train_only).collect(),
            config: self.config.clone(),
        }
    }

    pub fn needs_partner(&self) -> bool {
        self.stages.iter().any(|s| s.kind == StageKind::LesionMix)
    }

    /// `F -> D -> E -> C` style rendering.
    pub fn describe(&self) -> String {
        if self.stages.is_empty() {
            return "(none)".into();
        }
        self.stages
            .iter()
            .map(|s| format!("{}:{}", s.kind.scenario(), s.kind.name()))
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

pub fn build_scenario(id: ScenarioId) -> TransformChain {
    build_scenario_with(id, &ScenarioConfig::default())
}

pub fn build_scenario_with(id: ScenarioId, config: &ScenarioConfig) -> TransformChain {
    let letters: Vec<ScenarioId> = match id.single_stage() {
        Some(_) => vec![id],
        None => id.components().to_vec(),
    };
    let stages = letters
        .into_iter()
        .map(|s| {
            let kind = s.single_stage().expect("components are single-stage scenarios");
            Stage {
                kind,
                train_only: kind == StageKind::LesionMix,
            }
        })
        .collect();
    TransformChain {
        scenario: id,
        stages,
        config: config.clone(),
    }
}

/// Supplies the foreground lesion for Lesion Mix.
pub trait PartnerProvider: Sync {
    fn partner(&self, sample_id: &str, rng: &mut RngStream) -> Result<Sample>;
}

/// Uniform choice among other masked samples held in memory.
pub struct SamplePool {
    samples: Vec<Sample>,
}

impl SamplePool {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples }
    }
}

impl PartnerProvider for SamplePool {
    fn partner(&self, sample_id: &str, rng: &mut RngStream) -> Result<Sample> {
        let candidates: Vec<&Sample> = self
            .samples
            .iter()
            .filter(|s| s.mask.is_some() && s.id != sample_id)
            .collect();
        if candidates.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no masked partner available for {sample_id}"
            )));
        }
        let k = rng.up_to(candidates.len() as u32 - 1) as usize;
        Ok(candidates[k].clone())
    }
}

/// Uniform choice among other masked records of a manifest, loaded on demand.
pub struct ManifestPartners<'a> {
    manifest: &'a Manifest,
    masked: Vec<usize>,
}

impl<'a> ManifestPartners<'a> {
    pub fn new(manifest: &'a Manifest) -> Self {
        let masked = manifest
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.mask.is_some())
            .map(|(i, _)| i)
            .collect();
        Self { manifest, masked }
    }
}

impl PartnerProvider for ManifestPartners<'_> {
    fn partner(&self, sample_id: &str, rng: &mut RngStream) -> Result<Sample> {
        let candidates: Vec<usize> = self
            .masked
            .iter()
            .copied()
            .filter(|&i| self.manifest.records[i].id != sample_id)
            .collect();
        if candidates.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no masked partner available for {sample_id}"
            )));
        }
        let k = rng.up_to(candidates.len() as u32 - 1) as usize;
        self.manifest.load_sample(candidates[k])
    }
}

/// Runs the chain on one sample and resizes to `out_size` squared.
///
/// Stage `s` of copy `c` draws only from
/// `derive_stream(seed, sample.id, c, s)`. The returned sample keeps the
/// source id; its label reflects Lesion Mix, and its mask is dropped once
/// a geometric stage has moved pixels.
pub fn apply_chain(
    chain: &TransformChain,
    sample: &Sample,
    global_seed: u64,
    copy_index: u64,
    out_size: u32,
    partners: Option<&dyn PartnerProvider>,
) -> Result<Sample> {
    run_chain(chain, sample, global_seed, copy_index, out_size, partners, None)
}

pub(crate) fn run_chain(
    chain: &TransformChain,
    sample: &Sample,
    global_seed: u64,
    copy_index: u64,
    out_size: u32,
    partners: Option<&dyn PartnerProvider>,
    mut timings: Option<&mut [Duration]>,
) -> Result<Sample> {
    let cfg = &chain.config;
    let mut image = sample.image.clone();
    let mut mask = sample.mask.clone();
    let mut label = sample.label;

    for (index, stage) in chain.stages.iter().enumerate() {
        let started = Instant::now();
        let mut rng = crate::derive_stream(global_seed, &sample.id, copy_index, index as u64);
        let wrap = |e: Error| Error::Stage {
            stage: index,
            kind: stage.kind.name(),
            source: Box::new(e),
        };
        image = match stage.kind {
            StageKind::ColorJitter { hue } => {
                cfg.color.sample(&mut rng, hue).apply(&image).map_err(wrap)?
            }
            StageKind::Affine => {
                geometric::apply_affine(&image, &cfg.affine.sample(&mut rng)).map_err(wrap)?
            }
            StageKind::Flips => geometric::random_flip(&image, &mut rng),
            StageKind::RandomCrop => {
                let (win, _) = cfg.crop.sample_window(image.width(), image.height(), &mut rng);
                geometric::crop(&image, &win).map_err(wrap)?
            }
            StageKind::RandomErasing => erasing::random_erasing(&image, &mut rng, &cfg.erasing),
            StageKind::Elastic => {
                elastic::elastic_warp(&image, &mut rng, cfg.elastic.max_disp).map_err(wrap)?
            }
            StageKind::LesionMix => {
                let current = Sample {
                    id: sample.id.clone(),
                    image,
                    mask: mask.take(),
                    label,
                };
                if current.mask.is_none() {
                    return Err(wrap(Error::MissingMask {
                        id: sample.id.clone(),
                    }));
                }
                let provider = partners.ok_or_else(|| {
                    wrap(Error::InvalidParameter(
                        "Lesion Mix needs a partner provider".into(),
                    ))
                })?;
                let partner = provider.partner(&sample.id, &mut rng).map_err(wrap)?;
                let mixed = lesionmix::lesion_mix(&current, &partner, &cfg.mix).map_err(wrap)?;
                label = mixed.label;
                mask = mixed.mask;
                mixed.image
            }
        };
        if !stage.kind.keeps_mask() {
            mask = None;
        }
        if let Some(t) = timings.as_deref_mut() {
            t[index] += started.elapsed();
        }
    }

    let image = resize_to(&image, out_size, out_size)?;
    Ok(Sample {
        id: sample.id.clone(),
        image,
        mask: None,
        label,
    })
}
