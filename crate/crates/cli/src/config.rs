//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output = "runs/a"        # optional; `--out` wins
//!
//! [cleaning]
//! stop_threshold = 0.5
//!
//! [segmentation]
//! window_minutes = 15
//! overlap_fraction = 0.75
//!
//! [features]
//! use_histogram = true
//!
//! [model]
//! kind = "mlp"
//! hidden_layers = [100]
//!
//! [grid]                   # optional; used by `grid`
//! window_minutes = [5, 10, 15, 30]
//! overlaps = [0.0, 0.25, 0.5, 0.75]
//! feature_subsets = ["all", "hist"]
//! repetitions = 5
//! [[grid.models]]
//! kind = "knn"
//! k = 5
//! ```
//!
//! Every section is optional and falls back to defaults. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use anyhow::Context;
use driverid_core::eval::GridSpec;
use driverid_core::models::ModelSpec;
use driverid_core::{CleaningConfig, FeatureConfig, SegmentationConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub cleaning: CleaningConfig,
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
    pub model: ModelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.cleaning.validate()?;
        self.segmentation.validate()?;
        self.features.validate()?;
        self.model.validate()?;
        if let Some(grid) = &self.grid {
            grid.validate()?;
            for spec in &grid.models {
                spec.validate()?;
            }
        }
        Ok(())
    }

    /// Snapshot written into reports. The output location is left out so
    /// reruns into different directories produce identical reports.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut copy = self.clone();
        copy.output = None;
        serde_json::to_value(copy).expect("config serializes")
    }
}
