use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use driverid_core::synth::Separation;
use driverid_core::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "driverid", version, about = "Identify drivers from smartphone IMU logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus with ground truth.
    Synth(SynthArgs),
    /// Clean every trip in a manifest and report what was removed.
    Clean(Common),
    /// Write the feature vectors of both partitions.
    Featurize(Common),
    /// Train a model on the training partition.
    Train(Common),
    /// Score a trained model on the test partition.
    Evaluate(EvaluateArgs),
    /// Run the window × overlap × features × model grid.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest CSV (`path,driver_id,rate_hz`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10)]
    pub drivers: usize,
    /// Trip length per driver.
    #[arg(long, default_value_t = 1.5)]
    pub hours: f64,
    #[arg(long, default_value_t = 2.0)]
    pub rate: f64,
    #[arg(long, default_value = "easy")]
    pub separation: Separation,
    #[arg(long, default_value_t = 2.0)]
    pub short_dropouts_per_hour: f64,
    #[arg(long, default_value_t = 0.0)]
    pub long_dropouts_per_hour: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: Common,
    /// Feature subset to include, e.g. `all`, `hist`, `hist+mean`. Repeatable.
    #[arg(long = "features")]
    pub features: Vec<String>,
    /// Model kind to include. Repeatable.
    #[arg(long = "models")]
    pub models: Vec<ModelKind>,
    #[arg(long)]
    pub windows: Vec<f64>,
    #[arg(long)]
    pub overlaps: Vec<f64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Stop after this many cells; the report is marked incomplete.
    #[arg(long)]
    pub max_cells: Option<usize>,
}
