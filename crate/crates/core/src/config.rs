//! TOML run configuration covering extraction and evaluation.
//!
//! ```toml
//! [preprocess]
//! silence_threshold_db = -40.0
//!
//! [pitch]
//! voicing_threshold = 0.07
//!
//! [evaluation]
//! folds = 5
//! classifiers = ["nb", "svm"]
//!
//! [evaluation.hyper.svm]
//! c = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::features::FeatureConfig;
use crate::preprocess::PreprocessConfig;
use crate::source::PitchConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub pitch: PitchConfig,
    pub evaluation: EvalConfig,
}

impl RunConfig {
    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            preprocess: self.preprocess.clone(),
            pitch: self.pitch.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.features().validate()?;
        self.evaluation.validate()
    }

    /// Parse errors carry the offending line and key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
