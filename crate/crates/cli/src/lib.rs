//! Batch frontend for the driver identification pipeline.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

use std::fmt;

pub use args::{Cli, Command};

/// A command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration (exit 2).
    Usage(anyhow::Error),
    /// Anything that goes wrong while running (exit 1).
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, err) = match self {
            Failure::Usage(e) => ("usage error", e),
            Failure::Runtime(e) => ("error", e),
        };
        write!(f, "{kind}: {err:#}")
    }
}

pub(crate) trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Clean(a) => commands::clean(&a),
        Command::Featurize(a) => commands::featurize(&a),
        Command::Train(a) => commands::train(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Grid(a) => commands::grid(&a),
    }
}
