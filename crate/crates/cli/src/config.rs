//! Experiment configuration file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use bfgs_core::{
    start_at_distance, start_in_local_region, threshold_constants, DVector, Error, InitStrategy, LineSearchConfig,
    ProblemDescriptor, ProblemSpec, RestartConfig, SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemEntry>,
    pub solvers: Vec<SolverEntry>,
    #[serde(default)]
    pub budgets: Budgets,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 runs sequentially.
    #[serde(default)]
    pub parallel_workers: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub problem: ProblemDescriptor,
    #[serde(default)]
    pub start: StartSpec,
}

/// Starting point relative to the problem's minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    /// `x_0 = x_* + distance u` with a seeded random unit vector `u`.
    Distance {
        distance: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Shrinks the distance from `initial_distance` until
    /// `H sigma_0 <= fraction Delta` for the unit-step threshold at `eta1`.
    LocalRegion {
        fraction: f64,
        #[serde(default = "default_region_eta1")]
        eta1: f64,
        #[serde(default = "default_initial_distance")]
        initial_distance: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_region_eta1() -> f64 {
    0.25
}

fn default_initial_distance() -> f64 {
    1.0
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::Distance { distance: 1.0, seed: 0 }
    }
}

impl StartSpec {
    pub fn point(&self, problem: &ProblemSpec) -> bfgs_core::Result<DVector<f64>> {
        match *self {
            StartSpec::Distance { distance, seed } => start_at_distance(problem, distance, seed),
            StartSpec::LocalRegion {
                fraction,
                eta1,
                initial_distance,
                seed,
            } => {
                let tc = threshold_constants(eta1)?;
                start_in_local_region(problem, fraction * tc.delta, initial_distance, seed)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    /// Unique name, used in trace file names.
    pub name: String,
    pub line_search: LineSearchConfig,
    #[serde(default = "default_init")]
    pub init: InitStrategy,
    #[serde(default)]
    pub restart: Option<RestartConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn default_init() -> InitStrategy {
    InitStrategy::InverseScaledIdentity
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Target accuracy for the complexity constants and restart early exit.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub f_tol: Option<f64>,
}

fn default_max_iters() -> usize {
    2000
}

fn default_grad_tol() -> f64 {
    1e-9
}

fn default_eps() -> f64 {
    1e-10
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_iters: default_max_iters(),
            grad_tol: default_grad_tol(),
            eps: default_eps(),
            f_tol: None,
        }
    }
}

impl SolverEntry {
    pub fn solver_config(&self, budgets: &Budgets) -> SolverConfig {
        SolverConfig {
            line_search: self.line_search,
            init: self.init.clone(),
            max_iters: budgets.max_iters,
            grad_tol: budgets.grad_tol,
            f_tol: budgets.f_tol,
            record_diagnostics: true,
            seed: self.seed,
            scaling: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads and validates a config; a relative `output_dir` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if config.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.output_dir = base.join(&config.output_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.problems.is_empty() {
            return Err(Error::config("problems", "at least one problem is required").into());
        }
        if self.solvers.is_empty() {
            return Err(Error::config("solvers", "at least one solver is required").into());
        }
        let mut names = HashSet::new();
        for s in &self.solvers {
            if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::config("solvers.name", format!("'{}' must be non-empty [A-Za-z0-9_-]", s.name)).into());
            }
            if !names.insert(s.name.as_str()) {
                return Err(Error::config("solvers.name", format!("duplicate solver name '{}'", s.name)).into());
            }
            s.solver_config(&self.budgets).validate()?;
            if let Some(r) = &s.restart {
                if r.max_epochs == 0 {
                    return Err(Error::config("restart.max_epochs", "must be at least 1").into());
                }
            }
        }
        if self.budgets.max_iters == 0 {
            return Err(Error::config("budgets.max_iters", "must be at least 1").into());
        }
        if !(self.budgets.eps > 0.0) {
            return Err(Error::config("budgets.eps", "must be positive").into());
        }
        Ok(())
    }
}
