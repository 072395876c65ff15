//! Experiment driver: configuration, execution, trace files and offline
//! verification.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod trace;
pub mod verify;

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bfgs_core::Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

pub use config::{Budgets, ExperimentConfig, ProblemEntry, SolverEntry, StartSpec};
pub use experiment::{run_experiment, RunOptions, RunOutcome, Summary};
