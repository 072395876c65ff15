//! Per-iteration potentials and local measures along a BFGS trajectory, the
//! complexity constants they feed, and checks of the rate inequalities.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::LineSearchConfig;
use crate::operators::{alpha_beta_phi, bregman_distance, dennis_more_ratio, OperatorContext, SpdOperator};
use crate::problems::ProblemSpec;
use crate::scalarfn::{omega, omega_inverse, threshold_constants};
use crate::solver::{IterateState, SolveTrace, SolverConfig};

/// Relative slack granted to every checked inequality.
pub const REL_SLACK: f64 = 1e-8;
/// Absolute tolerance of the pointwise identity `xi^2 = alpha beta - 2 beta + 1`.
pub const DM_IDENTITY_TOL: f64 = 1e-9;

/// Operators fixed along a run: `L B`, `grad^2 f(x_*)` and the accuracy of
/// the reference minimizer in its own norm.
#[derive(Clone, Debug)]
pub struct ReferenceFrame {
    pub ctx: OperatorContext,
    pub lb: SpdOperator,
    pub hess_star: Option<SpdOperator>,
    pub h: f64,
    /// Uncertainty of `r_k` caused by the inexact reference minimizer.
    pub r_noise: f64,
    problem: ProblemSpec,
}

impl ReferenceFrame {
    pub fn new(problem: &ProblemSpec, ctx: &OperatorContext) -> Result<Self> {
        if problem.f_star.is_none() && problem.x_star.is_none() {
            return Err(Error::MissingReference(format!("no reference solution for {}", problem.label)));
        }
        let lb = ctx.scaling.scaled(problem.lipschitz_l)?;
        let (hess_star, r_noise) = match &problem.x_star {
            Some(xs) => match problem.hessian(xs) {
                Some(h) => {
                    let h = h?;
                    let g = problem.gradient(xs)?;
                    let noise = 2.0 * h.dual_quad(&g).sqrt() + 64.0 * f64::EPSILON * (1.0 + h.quad(xs).sqrt());
                    (Some(h), noise)
                }
                None => (None, 0.0),
            },
            None => (None, 0.0),
        };
        Ok(ReferenceFrame {
            ctx: ctx.clone(),
            lb,
            hess_star,
            h: problem.self_concordancy(),
            r_noise,
            problem: problem.clone(),
        })
    }
}

/// Diagnostics of iterate `k`. Step quantities are absent on the final
/// point; quantities measured at `x_*` are absent without a Hessian oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub k: usize,
    /// `f(x_k) - f_*`.
    pub f_res: f64,
    /// `|grad f(x_k)|_*`.
    pub grad_norm: f64,
    /// `sqrt(f(x_k) - f_*)`.
    pub sigma: f64,
    /// `|x_k - x_*|_{x_*}`.
    pub r: Option<f64>,
    /// `|grad f(x_k)|_{x_k,*}`.
    pub lambda: Option<f64>,
    /// `|grad f(x_k)|_{x_*,*}`.
    pub lambda_star: Option<f64>,
    pub step: Option<f64>,
    /// `<g,d>^2 / (|g|_*^2 |d|^2)`.
    pub theta: Option<f64>,
    pub phi_lb: Option<f64>,
    pub phi_star: Option<f64>,
    pub alpha_star: Option<f64>,
    pub beta_star: Option<f64>,
    /// Dennis-More ratio `|g - grad^2 f(x_*) d|_{x_*,*} / |d|_{x_*}`.
    pub xi: Option<f64>,
    /// `psi(L B, G_k)`.
    pub psi_lb: Option<f64>,
    /// `psi(grad^2 f(x_*), G_k)`.
    pub psi_star: Option<f64>,
    pub unit_step: Option<bool>,
    /// `f(x_k) - f(x_{k+1})` as measured by the line search.
    pub decrease: Option<f64>,
    pub f_evals: Option<usize>,
    pub g_evals: Option<usize>,
}

/// Point quantities at `x` with approximation `G` (if any).
pub fn point_metrics(
    k: usize,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    g_k: Option<&SpdOperator>,
    frame: &ReferenceFrame,
) -> Result<DiagnosticsRecord> {
    let p = &frame.problem;
    let f_res = p.residual(x)?;
    let mut rec = DiagnosticsRecord {
        k,
        f_res,
        grad_norm: frame.ctx.dual_norm(grad),
        sigma: f_res.sqrt(),
        ..Default::default()
    };
    if let Some(g) = g_k {
        rec.psi_lb = Some(bregman_distance(&frame.lb, g)?);
    }
    if let (Some(hs), Some(xs)) = (&frame.hess_star, &p.x_star) {
        rec.r = Some(hs.quad(&(x - xs)).sqrt());
        rec.lambda_star = Some(hs.dual_quad(grad).sqrt());
        if let Some(g) = g_k {
            rec.psi_star = Some(bregman_distance(hs, g)?);
        }
        if let Some(hx) = p.hessian(x) {
            rec.lambda = Some(hx?.dual_quad(grad).sqrt());
        }
    }
    Ok(rec)
}

/// Point quantities at `x_k` plus the step quantities of iteration `k`.
pub fn iteration_metrics(state: &IterateState, g_k: &SpdOperator, frame: &ReferenceFrame) -> Result<DiagnosticsRecord> {
    let mut rec = point_metrics(state.k, &state.x, &state.grad, Some(g_k), frame)?;
    let (g, d) = (&state.grad, &state.direction);
    let gd = g.dot(d);
    rec.step = Some(state.step);
    rec.unit_step = Some(state.step == 1.0);
    rec.theta = Some(gd * gd / (frame.ctx.dual_norm_sq(g) * frame.ctx.norm_sq(d)));
    rec.phi_lb = Some(alpha_beta_phi(&frame.lb, d, g)?.phi);
    if let Some(hs) = &frame.hess_star {
        let m = alpha_beta_phi(hs, d, g)?;
        rec.phi_star = Some(m.phi);
        rec.alpha_star = Some(m.alpha);
        rec.beta_star = Some(m.beta);
        rec.xi = Some(dennis_more_ratio(hs, d, g)?);
    }
    rec.decrease = Some(state.line_search.decrease);
    rec.f_evals = Some(state.line_search.f_evals);
    rec.g_evals = Some(state.line_search.g_evals);
    Ok(rec)
}

/// Problem and rule constants needed to check a recorded trajectory.
#[derive(Clone, Debug)]
pub struct VerifyContext {
    pub n: usize,
    pub kappa: f64,
    pub lipschitz_l: f64,
    pub h: f64,
    pub r_noise: f64,
    pub line_search: Option<LineSearchConfig>,
}

impl VerifyContext {
    pub fn new(problem: &ProblemSpec, frame: &ReferenceFrame, line_search: Option<LineSearchConfig>) -> Self {
        VerifyContext {
            n: problem.dim(),
            kappa: problem.kappa(),
            lipschitz_l: problem.lipschitz_l,
            h: frame.h,
            r_noise: frame.r_noise,
            line_search,
        }
    }

    fn unit_eta1(&self) -> Option<f64> {
        match self.line_search {
            Some(LineSearchConfig::BacktrackingUnit { eta1, .. }) => Some(eta1),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Holds,
    Violated,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: VerdictStatus,
    /// Number of individual inequalities evaluated.
    pub checked: usize,
    /// First violation, or the reason the check does not apply.
    pub detail: Option<String>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status != VerdictStatus::Violated
    }
}

struct Check {
    name: &'static str,
    checked: usize,
    violation: Option<String>,
    skipped: Option<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check {
            name,
            checked: 0,
            violation: None,
            skipped: None,
        }
    }

    fn skip(name: &'static str, reason: &str) -> Verdict {
        let mut c = Check::new(name);
        c.skipped = Some(reason.to_string());
        c.done()
    }

    /// Records `lhs <= rhs` up to `REL_SLACK max(|lhs|, |rhs|, unit) + abs`.
    fn le(&mut self, k: usize, lhs: f64, rhs: f64, unit: f64, abs: f64) {
        self.checked += 1;
        let slack = REL_SLACK * lhs.abs().max(rhs.abs()).max(unit) + abs;
        if !(lhs <= rhs + slack) && self.violation.is_none() {
            self.violation = Some(format!("k = {k}: {lhs:e} > {rhs:e}"));
        }
    }

    fn flag(&mut self, k: usize, ok: bool, what: &str) {
        self.checked += 1;
        if !ok && self.violation.is_none() {
            self.violation = Some(format!("k = {k}: {what}"));
        }
    }

    fn done(self) -> Verdict {
        let (status, detail) = if let Some(v) = self.violation {
            (VerdictStatus::Violated, Some(v))
        } else if let Some(s) = self.skipped {
            (VerdictStatus::NotApplicable, Some(s))
        } else if self.checked == 0 {
            (VerdictStatus::NotApplicable, Some("no applicable iterations".to_string()))
        } else {
            (VerdictStatus::Holds, None)
        };
        Verdict {
            name: self.name.to_string(),
            status,
            checked: self.checked,
            detail,
        }
    }
}

/// `S_k = H sum_{i<k} sigma_i` for `k = 0..=rows.len()`.
fn sigma_prefix(rows: &[DiagnosticsRecord], h: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for r in rows {
        acc += r.sigma;
        out.push(h * acc);
    }
    out
}

/// Number of completed steps: rows carrying a step size.
fn steps(rows: &[DiagnosticsRecord]) -> usize {
    rows.iter().take_while(|r| r.step.is_some()).count()
}

fn all_some(rows: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> Option<f64>) -> Option<Vec<f64>> {
    rows.iter().map(f).collect()
}

/// Checks every applicable rate inequality on a recorded trajectory
/// (`rows[k]` describes iterate `k`; the last row is the final point).
pub fn verify_records(rows: &[DiagnosticsRecord], ctx: &VerifyContext) -> Vec<Verdict> {
    let mut out = Vec::new();
    if rows.is_empty() {
        return out;
    }
    let k_steps = steps(rows);
    let ln_kappa = ctx.kappa.ln();
    let psi0 = rows[0].psi_lb;
    let psi0_l = rows[0].psi_star;
    let eta = ctx.line_search.and_then(|c| c.progress_eta());
    let unit_eta1 = ctx.unit_eta1();

    // Monotone decrease.
    let mut c = Check::new("monotone_decrease");
    for k in 0..k_steps.min(rows.len() - 1) {
        c.le(k, rows[k + 1].f_res, rows[k].f_res, 1e-6 * rows[k].f_res, 0.0);
    }
    out.push(c.done());

    // Guaranteed decrease per step.
    if let Some(ls) = ctx.line_search {
        let mut c = Check::new("func_prog");
        for k in 0..k_steps.min(rows.len() - 1) {
            let row = &rows[k];
            let eta_k = match (ls, row.step) {
                (LineSearchConfig::BacktrackingUnit { eta1, .. }, Some(h)) if h < 1.0 => Some(eta1 * (1.0 - eta1)),
                (LineSearchConfig::BacktrackingUnit { .. }, _) => None,
                _ => eta,
            };
            let (Some(eta_k), Some(theta)) = (eta_k, row.theta) else { continue };
            let required = eta_k * theta * row.grad_norm * row.grad_norm / ctx.lipschitz_l;
            let actual = row.decrease.unwrap_or(row.f_res - rows[k + 1].f_res);
            c.le(k, required, actual, 1e-6 * row.f_res, 0.0);
        }
        out.push(c.done());
    } else {
        out.push(Check::skip("func_prog", "line search unknown"));
    }

    // Global linear rates.
    match (psi0, ctx.line_search) {
        (Some(psi0), Some(ls)) => {
            let (coef, coef_late) = match (unit_eta1, eta) {
                (Some(e1), _) => (e1 / ctx.kappa.powi(2), 0.5 * e1 / ctx.kappa.powi(2)),
                (None, Some(e)) => (2.0 * e / ctx.kappa.powi(2), e / ctx.kappa.powi(2)),
                _ => (f64::NAN, f64::NAN),
            };
            let f0 = rows[0].f_res;
            let k0_g = (2.0 * psi0).ceil() as usize;
            let mut c = Check::new("linear_rate");
            let mut late = Check::new("linear_rate_after_k0");
            for (k, row) in rows.iter().enumerate().skip(1) {
                let zeta = (-psi0 / k as f64).exp();
                c.le(k, row.f_res, (1.0 - coef * zeta).powi(k as i32) * f0, 0.0, 0.0);
                if k >= k0_g {
                    late.le(k, row.f_res, (1.0 - coef_late).powi(k as i32) * f0, 0.0, 0.0);
                }
            }
            let _ = ls;
            out.push(c.done());
            out.push(late.done());
        }
        _ => {
            out.push(Check::skip("linear_rate", "needs psi_lb and the line search"));
            out.push(Check::skip("linear_rate_after_k0", "needs psi_lb and the line search"));
        }
    }

    // Budget on the sum of phi measured in L B.
    match (psi0, all_some(&rows[..k_steps], |r| r.phi_lb)) {
        (Some(psi0), Some(phis)) => {
            let mut c = Check::new("sum_phi_lb");
            let mut acc = 0.0;
            for (i, phi) in phis.iter().enumerate() {
                acc += phi;
                let k = i + 1;
                c.le(k, acc, psi0 + k as f64 * ln_kappa, 1.0, 0.0);
            }
            out.push(c.done());
        }
        _ => out.push(Check::skip("sum_phi_lb", "needs psi_lb and phi_lb")),
    }

    let s_prefix = sigma_prefix(rows, ctx.h);
    let s_total = *s_prefix.last().unwrap_or(&0.0);

    // Budget on the sum of phi measured at x_*.
    match (psi0_l, all_some(&rows[..k_steps], |r| r.phi_star)) {
        (Some(psi0_l), Some(phis)) => {
            let mut c = Check::new("sum_phi_star");
            let mut acc = 0.0;
            for (i, phi) in phis.iter().enumerate() {
                acc += phi;
                let k = i + 1;
                let s_next = s_prefix.get(k + 1).copied().unwrap_or(s_total);
                c.le(k, acc, psi0_l + s_prefix[k] + s_next, 1.0, 0.0);
            }
            out.push(c.done());
        }
        _ => out.push(Check::skip("sum_phi_star", "needs x_* metrics")),
    }

    // Dennis-More identity and averaged rate.
    let xis = all_some(&rows[..k_steps], |r| r.xi);
    {
        let mut c = Check::new("dm_identity");
        for (k, row) in rows[..k_steps].iter().enumerate() {
            if let (Some(xi), Some(a), Some(b)) = (row.xi, row.alpha_star, row.beta_star) {
                let identity = a * b - 2.0 * b + 1.0;
                let tol = DM_IDENTITY_TOL * (1.0 + a * b + 2.0 * b);
                c.flag(k, (xi * xi - identity).abs() <= tol, &format!("xi^2 = {:e}, identity = {identity:e}", xi * xi));
            }
        }
        out.push(c.done());
    }
    match (psi0_l, &xis) {
        (Some(psi0_l), Some(xis)) if !xis.is_empty() => {
            let omega_big = psi0_l + 2.0 * s_total;
            let mut prefix = vec![0.0];
            for x in xis {
                prefix.push(prefix.last().unwrap() + x);
            }
            let m = xis.len();
            let mut c = Check::new("dm_rate");
            for k in 1..=m {
                let best = (0..=m - k).map(|k0| prefix[k0 + k] - prefix[k0]).fold(0.0, f64::max);
                let bound = omega_inverse(omega_big / k as f64).unwrap_or(f64::NAN);
                c.le(k, best / k as f64, bound, 1.0, 0.0);
            }
            out.push(c.done());
        }
        _ => out.push(Check::skip("dm_rate", "needs x_* metrics")),
    }

    // Residual recursions.
    let rs = all_some(rows, |r| r.r);
    match (&rs, &xis) {
        (Some(rs), Some(xis)) => {
            let mut full = Check::new("residual_via_dm");
            let mut simple = Check::new("residual_via_dm_simplified");
            let mut next = Check::new("next_residual");
            let abs = 4.0 * ctx.r_noise;
            for k in 0..k_steps.min(rs.len() - 1) {
                let (r0, r1) = (rs[k], rs[k + 1]);
                let hs = ctx.h * rows[k].sigma;
                let h = rows[k].step.unwrap_or(f64::NAN);
                let xi = xis[k];
                let rhs = xi * (r0 + r1) + (1.0 + 0.5 * hs) * (1.0 - h).abs() * r0 + 0.5 * hs * r0;
                full.le(k, r1, rhs, r0, abs);
                let coef = (2.0 + hs / 3.0) * xi + (1.0 + 0.5 * hs) * (1.0 - h).abs() + 0.5 * hs;
                simple.le(k, r1, coef * r0, r0, abs);
                next.le(k, r1, (1.0 + hs / 3.0) * r0, r0, abs);
            }
            out.push(full.done());
            out.push(simple.done());
            out.push(next.done());
        }
        _ => {
            for name in ["residual_via_dm", "residual_via_dm_simplified", "next_residual"] {
                out.push(Check::skip(name, "needs x_* metrics"));
            }
        }
    }

    // Local superlinear analysis of the unit-step rule.
    let constants = unit_eta1.filter(|&e| e < 0.5).and_then(|e| threshold_constants(e).ok());
    match (constants, &rs, psi0_l) {
        (Some(tc), Some(rs), Some(psi0_l)) => {
            let omega_big = psi0_l + 2.0 * s_total;
            let kmax = rs.len();
            let brackets: Vec<f64> = (0..kmax)
                .map(|k| {
                    if k == 0 {
                        return f64::INFINITY;
                    }
                    let kf = k as f64;
                    2.02 * omega_inverse(omega_big / kf).unwrap_or(f64::NAN) + (tc.upsilon * omega_big + s_total) / kf
                })
                .collect();
            let mut c = Check::new("superlinear_product");
            let mut entered = false;
            for k0 in 0..kmax {
                if ctx.h * rows[k0].sigma > tc.delta {
                    continue;
                }
                entered = true;
                for k in 1..(kmax - k0) {
                    let b = brackets[k];
                    if b <= 1.0 {
                        c.le(k0 + k, rs[k0 + k], b.powi(k as i32) * rs[k0], rs[k0], 4.0 * ctx.r_noise);
                    }
                }
            }
            if !entered {
                c.skipped = Some("trajectory never enters H sigma <= Delta".into());
            }
            out.push(c.done());

            let mut p = Check::new("unit_step_prediction");
            for row in &rows[..k_steps] {
                if let (Some(beta), Some(h)) = (row.beta_star, row.step) {
                    if ctx.h * row.sigma <= tc.delta && beta >= tc.beta_delta {
                        p.flag(row.k, h == 1.0, &format!("predicted unit step but h = {h}"));
                    }
                }
            }
            out.push(p.done());
        }
        _ => {
            out.push(Check::skip("superlinear_product", "needs the unit-step rule with eta1 < 1/2 and x_* metrics"));
            out.push(Check::skip("unit_step_prediction", "needs the unit-step rule with eta1 < 1/2 and x_* metrics"));
        }
    }

    // Local norms against the function residual.
    {
        let mut c = Check::new("local_metrics");
        for row in rows {
            let Some(r) = row.r else { continue };
            let hs = ctx.h * row.sigma;
            let two_delta = 2.0 * row.f_res;
            let abs = 8.0 * (r + ctx.r_noise) * ctx.r_noise;
            let unit = r * r;
            c.le(row.k, two_delta / (1.0 + hs / 3.0), r * r, unit, abs);
            c.le(row.k, r * r, (1.0 + hs / 3.0) * two_delta, unit, abs);
            if let Some(l) = row.lambda {
                c.le(row.k, two_delta / (1.0 + 0.5 * hs).powi(2), l * l, unit, abs);
                c.le(row.k, l * l, (1.0 + 0.25 * hs).powi(2) * two_delta, unit, abs);
            }
            if let Some(l) = row.lambda_star {
                let f = (1.0 + hs / 6.0) * (1.0 + 0.5 * hs);
                c.le(row.k, two_delta / f, l * l, unit, abs);
                c.le(row.k, l * l, f * two_delta, unit, abs);
            }
        }
        if rs.is_none() {
            c.skipped = Some("needs x_* metrics".into());
        }
        out.push(c.done());
    }
    out
}

/// Verdicts for a recorded single run.
pub fn verify_rate_inequalities(trace: &SolveTrace, problem: &ProblemSpec, config: &SolverConfig) -> Result<Vec<Verdict>> {
    if trace.records.is_empty() {
        return Err(Error::config("record_diagnostics", "the run did not record diagnostics"));
    }
    let frame = ReferenceFrame::new(problem, &config.context(problem.dim())?)?;
    let ctx = VerifyContext::new(problem, &frame, Some(config.line_search));
    Ok(verify_records(&trace.records, &ctx))
}

/// Complexity constants evaluated on a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `psi(L B, G_0)`.
    pub psi0: Option<f64>,
    /// `psi(grad^2 f(x_*), G_0)`.
    pub psi0_l: Option<f64>,
    /// `H sum_i sigma_i` over the whole trajectory.
    pub s_empirical: f64,
    /// `psi0_l + S_K + S_{K+1}` at the final index `K`.
    pub omega_empirical: Option<f64>,
    /// `psi0_l + 2 s_empirical`, used by the averaged and superlinear rates.
    pub omega_rates: Option<f64>,
    /// A priori bound on `Omega` for scalar initializations.
    pub omega_bound: Option<f64>,
    pub k0_g: Option<f64>,
    pub k_g_eps: Option<f64>,
    pub k0_l: Option<f64>,
    pub k1_l: Option<f64>,
    pub k1_l_eps: Option<f64>,
    pub total_bound: Option<f64>,
    pub upsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// Evaluates the complexity constants for a run started with `init_scalar`
/// (`G_0 = mu0 B` when `Some`), targeting accuracy `eps`.
pub fn bounds_report(
    rows: &[DiagnosticsRecord],
    problem: &ProblemSpec,
    line_search: &LineSearchConfig,
    init_scalar: Option<f64>,
    eps: f64,
) -> BoundsReport {
    let mut rep = BoundsReport::default();
    let Some(first) = rows.first() else { return rep };
    let n = problem.dim() as f64;
    let kappa = problem.kappa();
    let h = problem.self_concordancy();
    let delta0 = first.f_res;
    rep.psi0 = first.psi_lb;
    rep.psi0_l = first.psi_star;
    let s = sigma_prefix(rows, h);
    let s_total = *s.last().unwrap_or(&0.0);
    let s_last = if rows.len() >= 2 { s[rows.len() - 1] } else { 0.0 };
    rep.s_empirical = s_total;
    rep.omega_empirical = rep.psi0_l.map(|p| p + s_last + s_total);
    rep.omega_rates = rep.psi0_l.map(|p| p + 2.0 * s_total);
    rep.k0_g = rep.psi0.map(|p| (2.0 * p).ceil());

    let log_ratio = if eps > 0.0 && delta0 > eps { (delta0 / eps).ln() } else { 0.0 };
    let unit_eta1 = match *line_search {
        LineSearchConfig::BacktrackingUnit { eta1, .. } => Some(eta1),
        _ => None,
    };
    rep.k_g_eps = match (unit_eta1, line_search.progress_eta()) {
        (Some(e1), _) => Some(2.0 / e1 * kappa * kappa * log_ratio),
        (None, Some(e)) => Some(kappa * kappa / e * log_ratio),
        _ => None,
    };

    if let Some(e1) = unit_eta1.filter(|&e| e < 0.5) {
        if let Ok(tc) = threshold_constants(e1) {
            rep.upsilon = Some(tc.upsilon);
            rep.delta = Some(tc.delta);
            let sigma0 = delta0.sqrt();
            let k0_l = if h * sigma0 <= tc.delta {
                0.0
            } else {
                (2.0 / e1 * kappa * kappa * (h * h * delta0 / (tc.delta * tc.delta)).ln() + 2.0 * n * kappa.ln()).ceil()
            };
            rep.k0_l = Some(k0_l);
            rep.k1_l = rep.omega_rates.map(|o| (7.0 * (tc.upsilon + 3.02) * o).ceil());
            rep.k1_l_eps = (h > 0.0 && eps > 0.0).then(|| (0.5 * (0.01 / (h * h * eps)).log2()).max(0.0));
            rep.total_bound = match (rep.k1_l, rep.k1_l_eps) {
                (Some(k1), Some(k1e)) => Some(k0_l + k1 + k1e.ceil()),
                (Some(k1), None) => Some(k0_l + k1),
                _ => None,
            };
            let tail = 2.0 * (4.0 / e1 * kappa * kappa + (2.0 * n * kappa.ln()).ceil()) * h * sigma0;
            rep.omega_bound = init_scalar.and_then(|mu0| {
                let nu = mu0 / problem.mu;
                if !(mu0 >= problem.mu * (1.0 - 1e-12) && mu0 <= problem.lipschitz_l * (1.0 + 1e-12)) {
                    return None;
                }
                let head = n * (kappa.ln() + omega(nu.max(1.0) - 1.0).ok()?);
                Some(head.min(n * kappa) + tail)
            });
        }
    }
    rep
}
