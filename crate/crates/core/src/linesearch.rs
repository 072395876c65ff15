//! Step-size rules for `x+ = x - h d`: constant step, two backtracking
//! variants, Armijo-Goldstein and Wolfe-Powell.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorContext;
use crate::problems::ProblemSpec;

/// Floor for the starting local Lipschitz estimate of the backtracking search.
pub const MIN_LOCAL_L: f64 = 1e-12;
/// Smallest admissible gap between the two Wolfe-Powell parameters.
pub const WOLFE_MIN_GAP: f64 = 1e-6;

fn default_budget() -> usize {
    64
}

/// How the backtracking search picks its first estimate `L_{k,0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLRule {
    /// `L_{k,0} = value` at every iteration.
    Fixed { value: f64 },
    /// `L_{0,0} = initial`, then `L_{k,0} = max(L_{k-1} / 2, MIN_LOCAL_L)`.
    HalvePrevious { initial: f64 },
}

impl Default for InitialLRule {
    fn default() -> Self {
        InitialLRule::HalvePrevious { initial: 1e-3 }
    }
}

impl InitialLRule {
    pub fn start(&self, previous: Option<f64>) -> f64 {
        match (*self, previous) {
            (InitialLRule::Fixed { value }, _) => value,
            (InitialLRule::HalvePrevious { initial }, None) => initial,
            (InitialLRule::HalvePrevious { .. }, Some(l)) => (l / 2.0).max(MIN_LOCAL_L),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum LineSearchConfig {
    /// `h = <g, d> / (L |d|^2)`; `lipschitz_l` defaults to the problem's `L`.
    ConstantStep {
        #[serde(default)]
        lipschitz_l: Option<f64>,
    },
    /// Doubles a local Lipschitz estimate until the Armijo test passes.
    BacktrackingEstimate {
        eta1: f64,
        #[serde(default)]
        initial_l: InitialLRule,
        #[serde(default = "default_budget")]
        max_iters: usize,
    },
    /// Halves `h` starting from the unit step until the Armijo test passes.
    BacktrackingUnit {
        eta1: f64,
        #[serde(default = "default_budget")]
        max_iters: usize,
    },
    /// `eta1 h <g,d> <= f(x) - f(x+) <= eta2 h <g,d>`.
    ArmijoGoldstein {
        eta1: f64,
        eta2: f64,
        #[serde(default = "default_budget")]
        max_iters: usize,
    },
    /// Armijo test plus `<grad f(x+), d> <= eta2_prime <g, d>`.
    WolfePowell {
        eta1: f64,
        eta2_prime: f64,
        #[serde(default = "default_budget")]
        max_iters: usize,
    },
}

impl LineSearchConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LineSearchConfig::ConstantStep { .. } => "constant_step",
            LineSearchConfig::BacktrackingEstimate { .. } => "backtracking_estimate",
            LineSearchConfig::BacktrackingUnit { .. } => "backtracking_unit",
            LineSearchConfig::ArmijoGoldstein { .. } => "armijo_goldstein",
            LineSearchConfig::WolfePowell { .. } => "wolfe_powell",
        }
    }

    pub fn eta1(&self) -> Option<f64> {
        match *self {
            LineSearchConfig::ConstantStep { .. } => None,
            LineSearchConfig::BacktrackingEstimate { eta1, .. }
            | LineSearchConfig::BacktrackingUnit { eta1, .. }
            | LineSearchConfig::ArmijoGoldstein { eta1, .. }
            | LineSearchConfig::WolfePowell { eta1, .. } => Some(eta1),
        }
    }

    /// The `eta` of the guaranteed decrease
    /// `f(x) - f(x+) >= eta <g,d>^2 / (L |d|^2)`, when the rule certifies one
    /// for every accepted step. The unit-step rule does not.
    pub fn progress_eta(&self) -> Option<f64> {
        match *self {
            LineSearchConfig::ConstantStep { .. } => Some(0.5),
            LineSearchConfig::BacktrackingEstimate { eta1, .. } => Some(eta1 * (1.0 - eta1)),
            LineSearchConfig::BacktrackingUnit { .. } => None,
            LineSearchConfig::ArmijoGoldstein { eta1, eta2, .. } => Some(2.0 * eta1 * (1.0 - eta2)),
            LineSearchConfig::WolfePowell { eta1, eta2_prime, .. } => Some(eta1 * (1.0 - eta2_prime)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta1_ok = |eta1: f64, upper: f64, field: &str| {
            if eta1 > 0.0 && eta1 <= upper {
                Ok(())
            } else {
                Err(Error::config(field, format!("eta1 must lie in (0, {upper}], got {eta1}")))
            }
        };
        match *self {
            LineSearchConfig::ConstantStep { lipschitz_l } => {
                if let Some(l) = lipschitz_l {
                    if !(l > 0.0) || !l.is_finite() {
                        return Err(Error::config("lipschitz_l", format!("must be positive, got {l}")));
                    }
                }
                Ok(())
            }
            LineSearchConfig::BacktrackingEstimate { eta1, initial_l, .. } => {
                eta1_ok(eta1, 0.5, "eta1")?;
                let l0 = match initial_l {
                    InitialLRule::Fixed { value } => value,
                    InitialLRule::HalvePrevious { initial } => initial,
                };
                if !(l0 > 0.0) || !l0.is_finite() {
                    return Err(Error::config("initial_l", format!("must be positive, got {l0}")));
                }
                Ok(())
            }
            LineSearchConfig::BacktrackingUnit { eta1, .. } => eta1_ok(eta1, 0.5, "eta1"),
            LineSearchConfig::ArmijoGoldstein { eta1, eta2, .. } => {
                eta1_ok(eta1, 0.5, "eta1")?;
                if !(eta2 > eta1 && eta2 < 1.0) {
                    return Err(Error::config("eta2", format!("must satisfy eta1 < eta2 < 1, got {eta2}")));
                }
                Ok(())
            }
            LineSearchConfig::WolfePowell { eta1, eta2_prime, .. } => {
                eta1_ok(eta1, 0.5, "eta1")?;
                if !(eta2_prime >= eta1 + WOLFE_MIN_GAP && eta2_prime < 1.0) {
                    return Err(Error::config(
                        "eta2_prime",
                        format!("must satisfy eta1 + {WOLFE_MIN_GAP:e} <= eta2_prime < 1, got {eta2_prime}"),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Inputs of one line search at `x` along `d` with `<g, d> > 0`.
pub struct StepRequest<'a> {
    pub problem: &'a ProblemSpec,
    pub ctx: &'a OperatorContext,
    pub x: &'a DVector<f64>,
    pub grad: &'a DVector<f64>,
    pub direction: &'a DVector<f64>,
    /// First Lipschitz estimate `L_{k,0}` for the backtracking-estimate rule.
    pub l_start: f64,
}

#[derive(Clone, Debug)]
pub struct LineSearchResult {
    pub step: f64,
    pub new_point: DVector<f64>,
    pub f_new: f64,
    /// `f(x) - f(x+)`, evaluated without cancellation.
    pub decrease: f64,
    /// Gradient at the accepted point if the rule already evaluated it.
    pub new_grad: Option<DVector<f64>>,
    pub f_evals: usize,
    pub g_evals: usize,
    /// Number of rejected trials before acceptance.
    pub accepted_index: usize,
    /// Accepted local Lipschitz estimate of the backtracking-estimate rule.
    pub local_l: Option<f64>,
    pub progress_eta: Option<f64>,
}

struct Trials<'a> {
    req: &'a StepRequest<'a>,
    slope: f64,
    f_evals: usize,
    g_evals: usize,
}

impl<'a> Trials<'a> {
    fn point(&self, h: f64) -> DVector<f64> {
        self.req.x - self.req.direction * h
    }

    fn decrease(&mut self, h: f64) -> Result<(DVector<f64>, f64)> {
        let p = self.point(h);
        self.f_evals += 1;
        let dec = self.req.problem.value_gap(self.req.x, &p)?;
        Ok((p, dec))
    }

    fn armijo(&self, h: f64, eta1: f64, decrease: f64) -> bool {
        decrease >= eta1 * h * self.slope
    }

    fn finish(
        mut self,
        h: f64,
        point: DVector<f64>,
        decrease: f64,
        new_grad: Option<DVector<f64>>,
        accepted_index: usize,
        local_l: Option<f64>,
        progress_eta: Option<f64>,
    ) -> Result<LineSearchResult> {
        self.f_evals += 1;
        let f_new = self.req.problem.value(&point)?;
        Ok(LineSearchResult {
            step: h,
            new_point: point,
            f_new,
            decrease,
            new_grad,
            f_evals: self.f_evals,
            g_evals: self.g_evals,
            accepted_index,
            local_l,
            progress_eta,
        })
    }
}

/// Runs the configured rule. Fails with `NonDescentDirection` if `<g, d> <= 0`
/// and with `BudgetExhausted` if no trial is accepted within the budget.
pub fn line_search(config: &LineSearchConfig, req: &StepRequest<'_>) -> Result<LineSearchResult> {
    let slope = req.grad.dot(req.direction);
    if !(slope > 0.0) {
        return Err(Error::NonDescentDirection { slope });
    }
    let d_sq = req.ctx.norm_sq(req.direction);
    let mut t = Trials {
        req,
        slope,
        f_evals: 0,
        g_evals: 0,
    };
    let eta = config.progress_eta();
    match *config {
        LineSearchConfig::ConstantStep { lipschitz_l } => {
            let l = lipschitz_l.unwrap_or(req.problem.lipschitz_l);
            let h = slope / (l * d_sq);
            let (p, dec) = t.decrease(h)?;
            t.finish(h, p, dec, None, 0, None, eta)
        }
        LineSearchConfig::BacktrackingEstimate { eta1, max_iters, .. } => {
            let mut l = req.l_start;
            for i in 0..max_iters {
                let h = slope / (l * d_sq);
                let (p, dec) = t.decrease(h)?;
                if t.armijo(h, eta1, dec) {
                    return t.finish(h, p, dec, None, i, Some(l), eta);
                }
                l *= 2.0;
            }
            Err(Error::BudgetExhausted {
                strategy: config.name(),
                budget: max_iters,
            })
        }
        LineSearchConfig::BacktrackingUnit { eta1, max_iters } => {
            let mut h = 1.0;
            for i in 0..max_iters {
                let (p, dec) = t.decrease(h)?;
                if t.armijo(h, eta1, dec) {
                    // A halved step certifies the same decrease as the estimate rule.
                    let eta = (i > 0).then_some(eta1 * (1.0 - eta1));
                    return t.finish(h, p, dec, None, i, None, eta);
                }
                h *= 0.5;
            }
            Err(Error::BudgetExhausted {
                strategy: config.name(),
                budget: max_iters,
            })
        }
        LineSearchConfig::ArmijoGoldstein { eta1, eta2, max_iters } => {
            bracket(&mut t, max_iters, config.name(), |t, h| {
                let (p, dec) = t.decrease(h)?;
                let verdict = if !t.armijo(h, eta1, dec) {
                    Bracket::TooLong
                } else if dec > eta2 * h * t.slope {
                    Bracket::TooShort
                } else {
                    Bracket::Accept(p, dec, None)
                };
                Ok(verdict)
            })
            .and_then(|(h, p, dec, g, i)| t.finish(h, p, dec, g, i, None, eta))
        }
        LineSearchConfig::WolfePowell {
            eta1,
            eta2_prime,
            max_iters,
        } => bracket(&mut t, max_iters, config.name(), |t, h| {
            let (p, dec) = t.decrease(h)?;
            if !t.armijo(h, eta1, dec) {
                return Ok(Bracket::TooLong);
            }
            t.g_evals += 1;
            let g = t.req.problem.gradient(&p)?;
            if g.dot(t.req.direction) > eta2_prime * t.slope {
                Ok(Bracket::TooShort)
            } else {
                Ok(Bracket::Accept(p, dec, Some(g)))
            }
        })
        .and_then(|(h, p, dec, g, i)| t.finish(h, p, dec, g, i, None, eta)),
    }
}

enum Bracket {
    TooShort,
    TooLong,
    Accept(DVector<f64>, f64, Option<DVector<f64>>),
}

type Accepted = (f64, DVector<f64>, f64, Option<DVector<f64>>, usize);

/// Expands or contracts from `h = 1` until an interval is bracketed, then bisects.
fn bracket(
    t: &mut Trials<'_>,
    max_iters: usize,
    name: &'static str,
    mut test: impl FnMut(&mut Trials<'_>, f64) -> Result<Bracket>,
) -> Result<Accepted> {
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut h = 1.0;
    for i in 0..max_iters {
        match test(t, h)? {
            Bracket::Accept(p, dec, g) => return Ok((h, p, dec, g, i)),
            Bracket::TooShort => lo = h,
            Bracket::TooLong => hi = h,
        }
        h = if hi.is_infinite() {
            2.0 * lo
        } else if lo == 0.0 {
            0.5 * hi
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::BudgetExhausted { strategy: name, budget: max_iters })
}
