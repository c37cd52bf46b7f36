//! Glue from cleaned trips to labeled train/test feature vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_sequence, FeatureConfig, FeatureError, FeatureSchema, FeatureVector};
use crate::ingest::IngestError;
use crate::models::{LabeledDataset, ModelError};
use crate::preprocess::{CleanTrip, PreprocessError};
use crate::segment::{cut_windows, split_train_test, Partition, SegmentError, SegmentationConfig, Window};
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Data(String),
}

/// Named sub-seed of a master seed (FNV-1a of the name, mixed with splitmix64).
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(master ^ h)
}

/// One splitmix64 step: a cheap, well-mixed bijection on `u64`.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Train and test windows of one trip.
pub fn segment_trip(
    trip: &CleanTrip,
    cfg: &SegmentationConfig,
) -> Result<(Vec<Window>, Vec<Window>), SegmentError> {
    cfg.validate()?;
    let w = cfg.window_samples(trip.nominal_rate_hz);
    let (train, test) = split_train_test(trip, cfg.train_fraction, w)?;
    Ok((cut_windows(trip, train, cfg)?, cut_windows(trip, test, cfg)?))
}

/// Window counts of one trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub trip: String,
    pub driver_id: String,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSplit {
    pub schema: FeatureSchema,
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
    pub counts: Vec<WindowCounts>,
}

impl FeatureSplit {
    pub fn train_dataset(&self) -> Result<LabeledDataset, ModelError> {
        LabeledDataset::from_vectors(&self.train, &self.schema)
    }

    pub fn test_dataset(&self) -> Result<LabeledDataset, ModelError> {
        LabeledDataset::from_vectors(&self.test, &self.schema)
    }
}

/// Splits, windows and featurizes every trip.
///
/// `names` labels trips in error messages and counts; it defaults to the
/// trip's position. Each partition's windows are featurized as their own
/// sequence, so the difference feature never pairs across partitions.
pub fn featurize_trips(
    trips: &[CleanTrip],
    names: Option<&[String]>,
    seg: &SegmentationConfig,
    feat: &FeatureConfig,
) -> Result<FeatureSplit, PipelineError> {
    feat.validate()?;
    seg.validate()?;
    let mut out = FeatureSplit {
        schema: feat.schema(),
        train: Vec::new(),
        test: Vec::new(),
        counts: Vec::with_capacity(trips.len()),
    };
    for (i, trip) in trips.iter().enumerate() {
        let name = names
            .and_then(|n| n.get(i).cloned())
            .unwrap_or_else(|| format!("trip {} ({})", i + 1, trip.driver_id));
        let (train, test) = segment_trip(trip, seg).map_err(|e| match e {
            SegmentError::InsufficientData(msg) => {
                SegmentError::InsufficientData(format!("{name}: {msg}"))
            }
            other => other,
        })?;
        out.counts.push(WindowCounts {
            trip: name,
            driver_id: trip.driver_id.clone(),
            train: train.len(),
            test: test.len(),
        });
        debug_assert!(train.iter().all(|w| w.partition == Partition::Train));
        out.train.extend(extract_sequence(&train, feat)?);
        out.test.extend(extract_sequence(&test, feat)?);
    }
    Ok(out)
}
