//! Workbench settings, read from an optional TOML file.
//!
//! ```toml
//! threshold = 0.5
//! eval_split = "validation"
//! finetune_epochs = 3
//!
//! [train]
//! epochs = 10
//! batch_size = 2084
//! learning_rate = 0.2
//! l1_weight = 1e-4
//! seed = 0
//!
//! [projection]
//! perplexity = 30.0
//! ```

use std::fs;
use std::path::Path;

use conceptkd_core::analytics::DEFAULT_THRESHOLD;
use conceptkd_core::distillation::TrainConfig;
use conceptkd_core::tsne::TsneParams;
use conceptkd_core::tuning::FineTuneConfig;
use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Result, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub train: TrainConfig,
    pub finetune_epochs: usize,
    /// Unset fields fall back to defaults sized for the corpus.
    pub projection: Option<TsneParams>,
    pub threshold: f64,
    pub eval_split: Split,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            train: TrainConfig::default(),
            finetune_epochs: FineTuneConfig::default().epochs,
            projection: None,
            threshold: DEFAULT_THRESHOLD,
            eval_split: Split::Validation,
        }
    }
}

impl WorkbenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        toml::from_str(&text).map_err(|e| StoreError::Format { path: path.into(), detail: e.message().to_string() })
    }

    /// Loads `path` if given, otherwise defaults, then applies a seed override.
    pub fn resolve(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = seed {
            cfg.train.seed = seed;
            if let Some(p) = &mut cfg.projection {
                p.seed = seed;
            }
        }
        if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
            return Err(conceptkd_core::Error::Parameter(format!("threshold {} outside (0, 1)", cfg.threshold)).into());
        }
        cfg.train.validate()?;
        Ok(cfg)
    }

    pub fn finetune(&self) -> FineTuneConfig {
        FineTuneConfig { epochs: self.finetune_epochs, optimizer: self.train.clone() }
    }

    pub fn projection_params(&self, corpus_size: usize) -> TsneParams {
        self.projection.unwrap_or_else(|| TsneParams {
            seed: self.train.seed,
            ..TsneParams::for_corpus_size(corpus_size)
        })
    }
}
