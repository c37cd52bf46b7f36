//! Per-window features: trimmed histograms, means, variances, inter-window
//! differences and pairwise correlations, plus train-only standardization.
//!
//! The vector layout is fixed: families in the order histogram, mean,
//! variance, difference, correlation; channels in the order
//! `ax, ay, az, gx, gy, gz`; correlation pairs lexicographic.

pub mod histogram;
mod standardize;
pub mod stats;
mod subset;

pub use histogram::{bin_edge, quantile_sorted, trim_range, trimmed_histogram};
pub use standardize::{Standardizer, STD_FLOOR};
pub use stats::{
    channel_pairs, mean_variance, pairwise_correlation, window_difference, window_difference_with,
    window_mean, window_variance, DifferenceMode, PAIR_COUNT,
};
pub use subset::FeatureSubset;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CHANNEL_NAMES;
use crate::segment::{Partition, Window};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("config error: {0}")]
    Config(String),
    #[error("signal has {0} samples; at least 2 are required")]
    ShortSignal(usize),
    #[error("window length {current} differs from previous window length {previous}")]
    LengthMismatch { current: usize, previous: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("standardizer needs at least 2 training vectors, got {0}")]
    TooFewVectors(usize),
    #[error("test-partition vector passed to standardizer fit (row {0})")]
    TestVectorInFit(usize),
    #[error("no sample of {n} lies inside the central {keep} range")]
    EmptyTrimRange { n: usize, keep: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Histogram,
    Mean,
    Variance,
    Difference,
    Correlation,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 5] = [
        FeatureFamily::Histogram,
        FeatureFamily::Mean,
        FeatureFamily::Variance,
        FeatureFamily::Difference,
        FeatureFamily::Correlation,
    ];

    pub fn key(self) -> &'static str {
        match self {
            FeatureFamily::Histogram => "hist",
            FeatureFamily::Mean => "mean",
            FeatureFamily::Variance => "var",
            FeatureFamily::Difference => "diff",
            FeatureFamily::Correlation => "corr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureFamily::Histogram => "Histogram",
            FeatureFamily::Mean => "Mean",
            FeatureFamily::Variance => "Variance",
            FeatureFamily::Difference => "Difference",
            FeatureFamily::Correlation => "Correlation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub use_histogram: bool,
    pub use_mean: bool,
    pub use_variance: bool,
    pub use_difference: bool,
    pub use_correlation: bool,
    pub histogram_bins: usize,
    pub trim_keep_fraction: f64,
    pub difference_mode: DifferenceMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            use_histogram: true,
            use_mean: true,
            use_variance: true,
            use_difference: true,
            use_correlation: true,
            histogram_bins: 100,
            trim_keep_fraction: 0.95,
            difference_mode: DifferenceMode::MeanDelta,
        }
    }
}

impl FeatureConfig {
    pub fn enabled(&self, family: FeatureFamily) -> bool {
        match family {
            FeatureFamily::Histogram => self.use_histogram,
            FeatureFamily::Mean => self.use_mean,
            FeatureFamily::Variance => self.use_variance,
            FeatureFamily::Difference => self.use_difference,
            FeatureFamily::Correlation => self.use_correlation,
        }
    }

    pub fn families(&self) -> Vec<FeatureFamily> {
        FeatureFamily::ALL
            .into_iter()
            .filter(|f| self.enabled(*f))
            .collect()
    }

    /// Same numeric settings with the families of `subset` switched on.
    pub fn with_subset(&self, subset: &FeatureSubset) -> Self {
        let mut cfg = self.clone();
        cfg.use_histogram = subset.contains(FeatureFamily::Histogram);
        cfg.use_mean = subset.contains(FeatureFamily::Mean);
        cfg.use_variance = subset.contains(FeatureFamily::Variance);
        cfg.use_difference = subset.contains(FeatureFamily::Difference);
        cfg.use_correlation = subset.contains(FeatureFamily::Correlation);
        cfg
    }

    pub fn subset(&self) -> FeatureSubset {
        FeatureSubset::new(self.families())
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.families().is_empty() {
            return Err(FeatureError::Config(
                "at least one feature family must be enabled".into(),
            ));
        }
        if self.histogram_bins == 0 {
            return Err(FeatureError::Config("histogram_bins must be at least 1".into()));
        }
        if !(self.trim_keep_fraction > 0.0 && self.trim_keep_fraction <= 1.0) {
            return Err(FeatureError::Config(format!(
                "trim_keep_fraction must be in (0, 1], got {}",
                self.trim_keep_fraction
            )));
        }
        Ok(())
    }

    pub fn schema(&self) -> FeatureSchema {
        let mut dims = Vec::new();
        for family in self.families() {
            match family {
                FeatureFamily::Histogram => {
                    for c in 0..6 {
                        for b in 0..self.histogram_bins {
                            dims.push(FeatureDescriptor::new(family, CHANNEL_NAMES[c], b));
                        }
                    }
                }
                FeatureFamily::Correlation => {
                    for (i, j) in channel_pairs() {
                        let pair = format!("{}_{}", CHANNEL_NAMES[i], CHANNEL_NAMES[j]);
                        dims.push(FeatureDescriptor::new(family, &pair, 0));
                    }
                }
                _ => {
                    for name in CHANNEL_NAMES {
                        dims.push(FeatureDescriptor::new(family, name, 0));
                    }
                }
            }
        }
        FeatureSchema { dims }
    }
}

/// One dimension of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub family: FeatureFamily,
    /// Channel name, or `a_b` for a correlation pair.
    pub signal: String,
    /// Histogram bin; 0 otherwise.
    pub index: usize,
}

impl FeatureDescriptor {
    fn new(family: FeatureFamily, signal: &str, index: usize) -> Self {
        Self {
            family,
            signal: signal.to_string(),
            index,
        }
    }

    pub fn name(&self) -> String {
        match self.family {
            FeatureFamily::Histogram => format!("hist_{}_{:03}", self.signal, self.index),
            f => format!("{}_{}", f.key(), self.signal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub dims: Vec<FeatureDescriptor>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.iter().map(FeatureDescriptor::name).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub driver_id: String,
    pub partition: Partition,
    pub start_t: f64,
    pub end_t: f64,
}

/// Features of one window, in schema order.
pub fn extract(
    window: &Window,
    previous: Option<&Window>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    cfg.validate()?;
    if window.len() < 2 {
        return Err(FeatureError::ShortSignal(window.len()));
    }
    let mut values = Vec::with_capacity(cfg.schema().len());
    for family in cfg.families() {
        match family {
            FeatureFamily::Histogram => {
                for c in 0..6 {
                    values.extend(trimmed_histogram(
                        &window.channels[c],
                        cfg.histogram_bins,
                        cfg.trim_keep_fraction,
                    )?);
                }
            }
            FeatureFamily::Mean => values.extend(window_mean(window)),
            FeatureFamily::Variance => values.extend(window_variance(window)),
            FeatureFamily::Difference => {
                values.extend(window_difference_with(window, previous, cfg.difference_mode)?)
            }
            FeatureFamily::Correlation => values.extend(pairwise_correlation(window)),
        }
    }
    Ok(FeatureVector {
        values,
        driver_id: window.driver_id.clone(),
        partition: window.partition,
        start_t: window.start_t,
        end_t: window.end_t,
    })
}

/// Featurizes an ordered window sequence of one partition, pairing each
/// window with its predecessor.
pub fn extract_sequence(
    windows: &[Window],
    cfg: &FeatureConfig,
) -> Result<Vec<FeatureVector>, FeatureError> {
    windows
        .iter()
        .enumerate()
        .map(|(i, w)| extract(w, i.checked_sub(1).map(|p| &windows[p]), cfg))
        .collect()
}

/// Writes vectors as CSV: `driver_id,partition,start_t,end_t` then one column
/// per schema dimension.
pub fn write_feature_csv<W: Write>(
    schema: &FeatureSchema,
    vectors: &[FeatureVector],
    sink: W,
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec![
        "driver_id".to_string(),
        "partition".to_string(),
        "start_t".to_string(),
        "end_t".to_string(),
    ];
    header.extend(schema.names());
    writer.write_record(&header)?;
    for v in vectors {
        let mut row = vec![
            v.driver_id.clone(),
            v.partition.to_string(),
            format!("{:?}", v.start_t),
            format!("{:?}", v.end_t),
        ];
        row.extend(v.values.iter().map(|x| format!("{x:?}")));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
