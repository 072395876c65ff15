//! Quasi-Newton BFGS with line searches, potential-function diagnostics and
//! checks of the global and local rate inequalities.

pub mod diagnostics;
pub mod error;
pub mod linesearch;
pub mod operators;
pub mod problems;
pub mod scalarfn;
pub mod solver;

pub use diagnostics::{
    bounds_report, iteration_metrics, point_metrics, verify_rate_inequalities, verify_records, BoundsReport,
    DiagnosticsRecord, ReferenceFrame, Verdict, VerdictStatus, VerifyContext,
};
pub use error::{Error, Result};
pub use linesearch::{line_search, InitialLRule, LineSearchConfig, LineSearchResult, StepRequest};
pub use operators::{
    alpha_beta_phi, bregman_distance, dennis_more_ratio, inv_bfgs_update, potential_decrement, primal_bfgs_update,
    CurvaturePair, OperatorContext, PairMeasures, SpdOperator,
};
pub use problems::{
    default_suite, logistic_problem, quadratic_problem, solve_reference, start_at_distance, start_in_local_region,
    Objective, ProblemDescriptor, ProblemSpec, Spectrum,
};
pub use scalarfn::{omega, omega_inverse, omega_star, omega_star_inverse, threshold_constants, ThresholdConstants};
pub use solver::{
    bfgs_solve, bfgs_with_restarts, InitStrategy, InitialApproximation, IterateState, RestartConfig, RestartMode,
    RestartRun, RestartSchedule, SolveTrace, SolverConfig, SolverStatus,
};

pub use nalgebra::{DMatrix, DVector};
