//! Scalar functions used by the potential analysis: `omega`, its conjugate,
//! their inverses, and the unit-step threshold constants.

use crate::error::{Error, Result};

/// Below this magnitude `omega` switches to its Taylor series.
pub const OMEGA_SERIES_CUTOFF: f64 = 1e-4;

const NEWTON_MAX_ITERS: usize = 100;
const BISECTION_MAX_ITERS: usize = 200;

/// `omega(t) = t - ln(1 + t)` for `t > -1`.
pub fn omega(t: f64) -> Result<f64> {
    if t.is_nan() || t <= -1.0 {
        return Err(Error::domain(format!("omega requires t > -1, got {t}")));
    }
    Ok(omega_raw(t))
}

pub(crate) fn omega_raw(t: f64) -> f64 {
    if t.abs() < OMEGA_SERIES_CUTOFF {
        // t^2/2 - t^3/3 + t^4/4 - t^5/5 + t^6/6
        let s = 1.0 / 2.0 - t * (1.0 / 3.0 - t * (1.0 / 4.0 - t * (1.0 / 5.0 - t / 6.0)));
        t * t * s
    } else if t.is_infinite() {
        f64::INFINITY
    } else {
        t - t.ln_1p()
    }
}

/// `omega_*(tau) = -tau - ln(1 - tau)` for `0 <= tau < 1`.
pub fn omega_star(tau: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::domain(format!("omega_star requires 0 <= tau < 1, got {tau}")));
    }
    Ok(omega_raw(-tau))
}

/// Inverse of `omega` on `[0, inf)`.
pub fn omega_inverse(u: f64) -> Result<f64> {
    if !(u >= 0.0) || u.is_infinite() {
        return Err(Error::domain(format!("omega_inverse requires finite u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let r = (2.0 * u).sqrt();
    let lo = (r + 2.0 * u / 3.0) * (1.0 - 1e-12);
    let hi = (r + u) * (1.0 + 1e-12);
    Ok(increasing_root(|t| (omega_raw(t) - u, t / (1.0 + t)), lo, hi))
}

/// Inverse of `omega_*` on `[0, inf)`, with values in `[0, 1)`.
pub fn omega_star_inverse(u: f64) -> Result<f64> {
    if !(u >= 0.0) || u.is_infinite() {
        return Err(Error::domain(format!(
            "omega_star_inverse requires finite u >= 0, got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let r = (2.0 * u).sqrt();
    let lo = -(-r - u / 3.0).exp_m1() * (1.0 - 1e-12);
    let hi = (-(-r - u).exp_m1() * (1.0 + 1e-12)).min(1.0 - f64::EPSILON / 2.0);
    Ok(increasing_root(|t| (omega_raw(-t) - u, t / (1.0 - t)), lo, hi))
}

/// Root of a convex increasing function inside `[lo, hi]`: Newton from the
/// right end, falling back to bisection if an iterate leaves the bracket.
fn increasing_root(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let mut t = hi;
    for _ in 0..NEWTON_MAX_ITERS {
        let (v, dv) = f(t);
        if v == 0.0 {
            return t;
        }
        if v < 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let next = t - v / dv;
        if !(next > lo && next < hi) || !next.is_finite() {
            break;
        }
        if (next - t).abs() <= 2.0 * f64::EPSILON * t.abs() {
            return next;
        }
        t = next;
    }
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_eta1(eta1: f64) -> Result<()> {
    if !(eta1 > 0.0 && eta1 < 0.5) {
        return Err(Error::domain(format!("eta1 must lie in (0, 1/2), got {eta1}")));
    }
    Ok(())
}

/// Returns `(beta(delta), delta_tilde)`: the smallest `beta` for which a unit
/// step passes the Armijo test when `H sigma <= delta`.
pub fn beta_threshold(eta1: f64, delta: f64) -> Result<(f64, f64)> {
    check_eta1(eta1)?;
    if !(delta >= 0.0) || delta.is_infinite() {
        return Err(Error::domain(format!("delta must be finite and >= 0, got {delta}")));
    }
    let tilde = delta / 3.0 * (1.0 + delta / 2.0).sqrt() * (1.0 + delta / 6.0).sqrt();
    let a = 1.0 + delta;
    let beta = ((a * a + 8.0 * (1.0 - eta1) * tilde).sqrt() + a) / (4.0 * (1.0 - eta1));
    Ok((beta, tilde))
}

/// `nu(q)` such that `delta <= nu(q) (1 - 2 eta1)` gives
/// `beta(delta) <= (1 - q) beta(0) + q`.
pub fn nu_coefficient(eta1: f64, q: f64) -> Result<f64> {
    check_eta1(eta1)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
    }
    let c = 1.0 - 2.0 * eta1;
    let tau = 2.0 * (1.0 - eta1) / (1.0 + c * q);
    Ok(6.0 * q / ((6.0 * tau * q * c + (3.0 + tau).powi(2)).sqrt() + 3.0 + tau))
}

/// Region and rate constants of the local superlinear analysis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdConstants {
    pub eta1: f64,
    /// Size of the region `H sigma <= delta` in which unit steps are predicted.
    pub delta: f64,
    pub beta_delta: f64,
    pub delta_tilde: f64,
    pub t_bar: f64,
    pub upsilon: f64,
}

pub fn threshold_constants(eta1: f64) -> Result<ThresholdConstants> {
    check_eta1(eta1)?;
    let c = 1.0 - 2.0 * eta1;
    let delta = 0.06 * c;
    let (beta_delta, delta_tilde) = beta_threshold(eta1, delta)?;
    let t_bar = 0.9 * c / (2.0 * (1.0 - eta1));
    let upsilon = 1.0 / omega_star(t_bar)?;
    Ok(ThresholdConstants {
        eta1,
        delta,
        beta_delta,
        delta_tilde,
        t_bar,
        upsilon,
    })
}
