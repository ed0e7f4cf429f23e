use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::erasing::ErasingParams;
use crate::geometric::{AffineRanges, CropRanges};
use crate::lesionmix::MixParams;
use crate::photometric::ColorJitterRanges;
use crate::{Error, Result};

/// Parameter set shipped with the crate; `ScenarioConfig::default()` equals it.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../config/scenarios-v1.toml");

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticRanges {
    /// Largest control-point displacement, as a fraction of image width.
    pub max_disp: f64,
}

impl Default for ElasticRanges {
    fn default() -> Self {
        Self { max_disp: 0.10 }
    }
}

/// Parameter ranges for every stage kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub color: ColorJitterRanges,
    pub affine: AffineRanges,
    pub crop: CropRanges,
    pub erasing: ErasingParams,
    pub elastic: ElasticRanges,
    pub mix: MixParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            color: ColorJitterRanges::default(),
            affine: AffineRanges::default(),
            crop: CropRanges::default(),
            erasing: ErasingParams::default(),
            elastic: ElasticRanges::default(),
            mix: MixParams::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses overrides; keys left out keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.color.validate()?;
        self.affine.validate()?;
        self.crop.validate()?;
        self.erasing.validate()?;
        if !(0.0..crate::elastic::MAX_DISPLACEMENT_LIMIT).contains(&self.elastic.max_disp) {
            return Err(Error::Config(format!(
                "elastic.max_disp must lie in [0, 1/6), got {}",
                self.elastic.max_disp
            )));
        }
        self.mix.validate()
    }
}
