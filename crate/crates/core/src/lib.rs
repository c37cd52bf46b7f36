//! Driver identification from smartphone accelerometer and gyroscope logs.
//!
//! The pipeline runs `ingest` → `preprocess` → `segment` → `features` →
//! `models` → `eval`. `synth` generates labeled trips with known stops and
//! gaps for end-to-end checks.

pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod segment;
pub mod synth;

pub use eval::{evaluate, run_grid, EvaluationReport, GridReport, GridSpec};
pub use features::{FeatureConfig, FeatureSchema, FeatureSubset, FeatureVector, Standardizer};
pub use ingest::{SensorSample, Trip};
pub use models::{LabeledDataset, ModelKind, ModelSpec, TrainedModel};
pub use preprocess::{CleanTrip, CleaningConfig};
pub use segment::{Partition, SegmentationConfig, Window};
pub use synth::{generate_trip, make_profiles, DriverProfile, Separation, SyntheticTruth};
