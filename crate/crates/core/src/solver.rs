//! Quasi-Newton iteration `x+ = x - h H grad f(x)` with the inverse BFGS
//! update, and the restart wrapper with doubling epoch budgets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{iteration_metrics, point_metrics, DiagnosticsRecord, ReferenceFrame};
use crate::error::{Error, Result};
use crate::linesearch::{line_search, LineSearchConfig, LineSearchResult, StepRequest};
use crate::operators::{inv_bfgs_update, primal_bfgs_update, CurvaturePair, OperatorContext, SpdOperator};
use crate::problems::{rng_for, ProblemSpec};

/// Choice of the initial inverse Hessian approximation `H_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitStrategy {
    /// `G_0 = mu0 B`, so `H_0 = B^{-1} / mu0`.
    ScaledIdentity { mu0: f64 },
    /// `H_0 = (L B)^{-1}` with the problem's smoothness constant.
    InverseScaledIdentity,
    /// `H_0 = <gamma', delta'> / |gamma'|_*^2 B^{-1}` from a probe pair at
    /// `x_0' = x_0 + probe_offset`.
    PairRayleighGamma {
        #[serde(default)]
        probe_offset: Option<Vec<f64>>,
    },
    /// `H_0 = |delta'|^2 / <gamma', delta'> B^{-1}` from the same probe pair.
    PairRayleighDelta {
        #[serde(default)]
        probe_offset: Option<Vec<f64>>,
    },
    /// Explicit `H_0`, given by rows.
    Explicit { h0: Vec<Vec<f64>> },
}

/// `H_0`, its inverse `G_0`, and the scalar `mu0` when `G_0 = mu0 B`.
#[derive(Clone, Debug)]
pub struct InitialApproximation {
    pub h0: SpdOperator,
    pub g0: SpdOperator,
    pub scalar: Option<f64>,
    pub f_evals: usize,
    pub g_evals: usize,
}

fn probe_offset(given: &Option<Vec<f64>>, x0: &DVector<f64>, seed: u64) -> Result<DVector<f64>> {
    let n = x0.len();
    let offset = match given {
        Some(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            DVector::from_column_slice(v)
        }
        None => {
            let mut rng = rng_for(seed);
            let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            u.normalize() * (1e-2 * x0.norm().max(1.0))
        }
    };
    if offset.iter().all(|&v| v == 0.0) {
        return Err(Error::InitFailure("probe point coincides with x0".into()));
    }
    Ok(offset)
}

pub fn initialize_hessian(
    problem: &ProblemSpec,
    x0: &DVector<f64>,
    init: &InitStrategy,
    ctx: &OperatorContext,
    seed: u64,
) -> Result<InitialApproximation> {
    let b = &ctx.scaling;
    let scalar = |mu0: f64, f_evals, g_evals| -> Result<InitialApproximation> {
        if !(mu0 > 0.0) || !mu0.is_finite() {
            return Err(Error::InitFailure(format!("scale must be positive, got {mu0}")));
        }
        Ok(InitialApproximation {
            h0: b.inverse()?.scaled(1.0 / mu0)?,
            g0: b.scaled(mu0)?,
            scalar: Some(mu0),
            f_evals,
            g_evals,
        })
    };
    match init {
        InitStrategy::ScaledIdentity { mu0 } => scalar(*mu0, 0, 0),
        InitStrategy::InverseScaledIdentity => scalar(problem.lipschitz_l, 0, 0),
        InitStrategy::PairRayleighGamma { probe_offset: p } | InitStrategy::PairRayleighDelta { probe_offset: p } => {
            let delta = probe_offset(p, x0, seed)?;
            let gamma = problem.gradient(&(x0 + &delta))? - problem.gradient(x0)?;
            let inner = gamma.dot(&delta);
            if !(inner > 0.0) {
                return Err(Error::InitFailure(format!("probe pair has <gamma, delta> = {inner:e}")));
            }
            // H_0 = c B^{-1} corresponds to G_0 = B / c.
            let c = match init {
                InitStrategy::PairRayleighGamma { .. } => inner / ctx.dual_norm_sq(&gamma),
                _ => ctx.norm_sq(&delta) / inner,
            };
            scalar(1.0 / c, 0, 2)
        }
        InitStrategy::Explicit { h0 } => {
            let n = x0.len();
            if h0.len() != n || h0.iter().any(|r| r.len() != n) {
                return Err(Error::InitFailure(format!("explicit H0 must be {n}x{n}")));
            }
            let m = DMatrix::from_fn(n, n, |i, j| h0[i][j]);
            let h = SpdOperator::new(m).map_err(|e| Error::InitFailure(e.to_string()))?;
            let g = h.inverse().map_err(|e| Error::InitFailure(e.to_string()))?;
            Ok(InitialApproximation {
                h0: h,
                g0: g,
                scalar: None,
                f_evals: 0,
                g_evals: 0,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub line_search: LineSearchConfig,
    pub init: InitStrategy,
    pub max_iters: usize,
    /// Stop when `|grad f(x_k)|_* <= grad_tol`.
    pub grad_tol: f64,
    /// Stop when `f(x_k) - f_* <= f_tol`; needs a known reference.
    pub f_tol: Option<f64>,
    /// Co-maintain `G_k = H_k^{-1}` and record per-iteration diagnostics.
    pub record_diagnostics: bool,
    /// Seed for the default probe direction of pair-based initializations.
    pub seed: u64,
    /// Scaling operator `B`; the identity when `None`.
    pub scaling: Option<SpdOperator>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            line_search: LineSearchConfig::BacktrackingUnit { eta1: 0.25, max_iters: 64 },
            init: InitStrategy::InverseScaledIdentity,
            max_iters: 2000,
            grad_tol: 1e-9,
            f_tol: None,
            record_diagnostics: false,
            seed: 0,
            scaling: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.line_search.validate()?;
        if !(self.grad_tol >= 0.0) {
            return Err(Error::config("grad_tol", format!("must be >= 0, got {}", self.grad_tol)));
        }
        if let Some(t) = self.f_tol {
            if !(t >= 0.0) {
                return Err(Error::config("f_tol", format!("must be >= 0, got {t}")));
            }
        }
        if let InitStrategy::ScaledIdentity { mu0 } = self.init {
            if !(mu0 > 0.0) || !mu0.is_finite() {
                return Err(Error::config("mu0", format!("must be positive, got {mu0}")));
            }
        }
        Ok(())
    }

    pub fn context(&self, n: usize) -> Result<OperatorContext> {
        match &self.scaling {
            None => Ok(OperatorContext::identity(n)),
            Some(b) if b.dim() == n => Ok(OperatorContext::new(b.clone())),
            Some(b) => Err(Error::DimensionMismatch {
                expected: n,
                found: b.dim(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    GradTolReached,
    FTolReached,
    MaxIters,
    /// The last pair failed the curvature test, which happens once iterates
    /// stop moving at machine precision.
    CurvatureConverged,
}

/// One completed iteration `x_k -> x_{k+1}`.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub k: usize,
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub direction: DVector<f64>,
    pub step: f64,
    pub delta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub line_search: LineSearchResult,
}

#[derive(Clone, Debug)]
pub struct SolveTrace {
    pub iterates: Vec<IterateState>,
    pub final_x: DVector<f64>,
    pub final_f: f64,
    pub final_grad: DVector<f64>,
    pub status: SolverStatus,
    pub f_evals: usize,
    pub g_evals: usize,
    pub init: InitialApproximation,
    pub final_h: SpdOperator,
    /// One record per iterate plus one for the final point; empty unless
    /// diagnostics were requested.
    pub records: Vec<DiagnosticsRecord>,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }
}

fn check_stop(problem: &ProblemSpec, ctx: &OperatorContext, config: &SolverConfig, x: &DVector<f64>, g: &DVector<f64>) -> Result<Option<SolverStatus>> {
    if ctx.dual_norm(g) <= config.grad_tol {
        return Ok(Some(SolverStatus::GradTolReached));
    }
    if let Some(tol) = config.f_tol {
        if problem.residual(x)? <= tol {
            return Ok(Some(SolverStatus::FTolReached));
        }
    }
    Ok(None)
}

pub fn bfgs_solve(problem: &ProblemSpec, x0: &DVector<f64>, config: &SolverConfig) -> Result<SolveTrace> {
    config.validate()?;
    let n = problem.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let ctx = config.context(n)?;
    let frame = if config.record_diagnostics {
        Some(ReferenceFrame::new(problem, &ctx)?)
    } else {
        None
    };

    let mut x = x0.clone();
    let mut f = problem.value(&x)?;
    let mut g = problem.gradient(&x)?;
    let init = initialize_hessian(problem, x0, &config.init, &ctx, config.seed)?;
    let mut f_evals = 1 + init.f_evals;
    let mut g_evals = 1 + init.g_evals;
    let mut h = init.h0.clone();
    let mut gk = frame.as_ref().map(|_| init.g0.clone());
    let mut prev_l = None;
    let mut iterates = Vec::new();
    let mut records = Vec::new();

    let status = loop {
        if let Some(s) = check_stop(problem, &ctx, config, &x, &g)? {
            break s;
        }
        if iterates.len() >= config.max_iters {
            break SolverStatus::MaxIters;
        }
        let d = h.apply(&g);
        let l_start = match config.line_search {
            LineSearchConfig::BacktrackingEstimate { initial_l, .. } => initial_l.start(prev_l),
            _ => 0.0,
        };
        let ls = line_search(
            &config.line_search,
            &StepRequest {
                problem,
                ctx: &ctx,
                x: &x,
                grad: &g,
                direction: &d,
                l_start,
            },
        )?;
        f_evals += ls.f_evals;
        g_evals += ls.g_evals;
        prev_l = ls.local_l.or(prev_l);
        let x_new = ls.new_point.clone();
        let g_new = match &ls.new_grad {
            Some(v) => v.clone(),
            None => {
                g_evals += 1;
                problem.gradient(&x_new)?
            }
        };
        let f_new = ls.f_new;
        let state = IterateState {
            k: iterates.len(),
            delta: &x_new - &x,
            gamma: &g_new - &g,
            x,
            f,
            grad: g,
            direction: d,
            step: ls.step,
            line_search: ls,
        };
        if let (Some(frame), Some(gk)) = (&frame, &gk) {
            records.push(iteration_metrics(&state, gk, frame)?);
        }
        let pair = CurvaturePair::new(state.delta.clone(), state.gamma.clone());
        iterates.push(state);
        x = x_new;
        f = f_new;
        g = g_new;
        match pair {
            Ok(pair) => {
                h = inv_bfgs_update(&h, &pair)?;
                if let Some(gm) = gk.as_mut() {
                    *gm = primal_bfgs_update(gm, &pair)?;
                }
            }
            Err(Error::CurvatureViolation { .. }) => break SolverStatus::CurvatureConverged,
            Err(e) => return Err(e),
        }
    };
    if let (Some(frame), Some(gk)) = (&frame, &gk) {
        records.push(point_metrics(iterates.len(), &x, &g, Some(gk), frame)?);
    }
    Ok(SolveTrace {
        iterates,
        final_x: x,
        final_f: f,
        final_grad: g,
        status,
        f_evals,
        g_evals,
        init,
        final_h: h,
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RestartMode {
    /// Every epoch runs its full budget with tolerances disabled.
    Strict,
    /// Epochs stop at the solver tolerances and the schedule stops at `eps`.
    #[default]
    EarlyExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartConfig {
    /// Budget `N` of the first epoch; the dimension when `None`.
    #[serde(default)]
    pub base_n: Option<usize>,
    #[serde(default)]
    pub mode: RestartMode,
    /// Epoch count in strict mode, and an upper bound otherwise.
    pub max_epochs: usize,
    /// Early-exit target for `f(y_t) - f_*`.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Cap on the cumulative budget; an epoch that would exceed it is not started.
    #[serde(default)]
    pub max_total_iters: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSchedule {
    pub base_n: usize,
    pub budgets: Vec<usize>,
    pub iterations: Vec<usize>,
    pub start_value: f64,
    /// `f(y_{t+1})` after each epoch.
    pub end_values: Vec<f64>,
    pub cumulative_budget: usize,
    pub cumulative_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct RestartRun {
    pub epochs: Vec<SolveTrace>,
    pub schedule: RestartSchedule,
}

/// Runs epochs `t = 0, 1, ...` of fresh BFGS from the previous end point with
/// budgets `N 2^t`.
pub fn bfgs_with_restarts(problem: &ProblemSpec, y0: &DVector<f64>, config: &SolverConfig, restart: &RestartConfig) -> Result<RestartRun> {
    let base_n = restart.base_n.unwrap_or(problem.dim());
    if base_n == 0 {
        return Err(Error::config("base_n", "must be at least 1"));
    }
    if restart.max_epochs == 0 {
        return Err(Error::config("max_epochs", "must be at least 1"));
    }
    let mut y = y0.clone();
    let start_value = problem.value(&y)?;
    let mut schedule = RestartSchedule {
        base_n,
        budgets: Vec::new(),
        iterations: Vec::new(),
        start_value,
        end_values: Vec::new(),
        cumulative_budget: 0,
        cumulative_iterations: 0,
    };
    let mut epochs = Vec::new();
    for t in 0..restart.max_epochs {
        let budget = base_n
            .checked_mul(1usize.checked_shl(t as u32).unwrap_or(0))
            .filter(|&b| b > 0)
            .ok_or_else(|| Error::config("max_epochs", "epoch budget overflows"))?;
        if let Some(cap) = restart.max_total_iters {
            if schedule.cumulative_budget + budget > cap {
                break;
            }
        }
        let mut epoch_config = config.clone();
        epoch_config.max_iters = budget;
        epoch_config.seed = config.seed.wrapping_add(t as u64);
        if restart.mode == RestartMode::Strict {
            epoch_config.grad_tol = 0.0;
            epoch_config.f_tol = None;
        }
        let trace = bfgs_solve(problem, &y, &epoch_config)?;
        y = trace.final_x.clone();
        schedule.budgets.push(budget);
        schedule.iterations.push(trace.iterations());
        schedule.end_values.push(trace.final_f);
        schedule.cumulative_budget += budget;
        schedule.cumulative_iterations += trace.iterations();
        let converged = trace.status == SolverStatus::GradTolReached;
        epochs.push(trace);
        if restart.mode == RestartMode::EarlyExit {
            if converged {
                break;
            }
            if let Some(eps) = restart.eps {
                if problem.residual(&y)? <= eps {
                    break;
                }
            }
        }
    }
    Ok(RestartRun { epochs, schedule })
}
