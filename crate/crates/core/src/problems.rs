//! Seeded test problems with known constants: rotated quadratics and
//! l2-regularized logistic regression.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{symmetrize, SpdOperator};
use crate::scalarfn::omega_raw;

/// Smooth strongly convex objective with first- and optionally second-order oracles.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// `f(x) - f(y)`. Implementations override this when the difference can
    /// be evaluated without cancellation.
    fn value_gap(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.value(x) - self.value(y)
    }
}

/// An objective together with its strong convexity, smoothness and
/// Hessian-Lipschitz constants (relative to the identity scaling) and,
/// when known, its minimizer.
#[derive(Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub objective: Arc<dyn Objective>,
    pub mu: f64,
    pub lipschitz_l: f64,
    pub lipschitz_l2: f64,
    pub f_star: Option<f64>,
    pub x_star: Option<DVector<f64>>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("mu", &self.mu)
            .field("lipschitz_l", &self.lipschitz_l)
            .field("lipschitz_l2", &self.lipschitz_l2)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Condition number `L / mu`.
    pub fn kappa(&self) -> f64 {
        self.lipschitz_l / self.mu
    }

    /// `H = sqrt(2) L2 / mu^{3/2}`.
    pub fn self_concordancy(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.lipschitz_l2 / self.mu.powf(1.5)
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let v = self.objective.value(x);
        if !v.is_finite() {
            return Err(Error::OracleFailure(format!("f = {v} on {}", self.label)));
        }
        Ok(v)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let g = self.objective.gradient(x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFailure(format!("non-finite gradient on {}", self.label)));
        }
        Ok(g)
    }

    pub fn value_gap(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let v = self.objective.value_gap(x, y);
        if !v.is_finite() {
            return Err(Error::OracleFailure(format!("f(x) - f(y) = {v} on {}", self.label)));
        }
        Ok(v)
    }

    /// Hessian as an operator, or `None` if the problem has no second-order oracle.
    pub fn hessian(&self, x: &DVector<f64>) -> Option<Result<SpdOperator>> {
        if let Err(e) = self.check_dim(x) {
            return Some(Err(e));
        }
        self.objective.hessian(x).map(SpdOperator::new)
    }

    /// `f(x) - f_*`, evaluated against the minimizer when it is known.
    pub fn residual(&self, x: &DVector<f64>) -> Result<f64> {
        match (&self.x_star, self.f_star) {
            (Some(xs), _) => Ok(self.value_gap(x, xs)?.max(0.0)),
            (None, Some(fs)) => Ok((self.value(x)? - fs).max(0.0)),
            (None, None) => Err(Error::MissingReference(format!("f_star unknown for {}", self.label))),
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// `f(x) = 1/2 (x - x_*)^T A (x - x_*) + c`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub a: DMatrix<f64>,
    pub x_star: DVector<f64>,
    pub c: f64,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = x - &self.x_star;
        0.5 * r.dot(&(&self.a * &r)) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * (x - &self.x_star)
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }

    fn value_gap(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let d = x - y;
        let s = (x - &self.x_star) + (y - &self.x_star);
        0.5 * d.dot(&(&self.a * s))
    }
}

/// `f(x) = (1/m) sum_i ln(1 + exp(-b_i <a_i, x>)) + mu/2 |x|^2` with labels `b_i = +-1`.
#[derive(Clone, Debug)]
pub struct Logistic {
    /// Rows are the feature vectors `a_i`.
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub reg_mu: f64,
}

/// `ln(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Logistic sigmoid `1 / (1 + e^{-s})`.
fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `e^h - 1 - h` without cancellation.
fn expm1_minus_linear(h: f64) -> f64 {
    if h.abs() >= 0.5 {
        return h.exp_m1() - h;
    }
    let (mut term, mut sum) = (0.5 * h * h, 0.0f64);
    let mut k = 2.0;
    while term.abs() > f64::EPSILON * sum.abs() * 0.25 && k < 40.0 {
        sum += term;
        k += 1.0;
        term *= h / k;
    }
    sum
}

/// `softplus(u + h) - softplus(u) - sigmoid(u) h`, accurate for small `h`.
fn softplus_remainder(u: f64, h: f64) -> f64 {
    if u > 0.0 {
        return softplus_remainder(-u, -h);
    }
    let s = sigmoid(u);
    if h.abs() > 1.0 {
        return softplus(u + h) - softplus(u) - s * h;
    }
    -omega_raw(s * h.exp_m1()) + s * expm1_minus_linear(h)
}

impl Logistic {
    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.features * x).component_mul(&self.labels)
    }

    fn samples(&self) -> f64 {
        self.features.nrows() as f64
    }
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let z = self.margins(x);
        z.iter().map(|&zi| softplus(-zi)).sum::<f64>() / self.samples() + 0.5 * self.reg_mu * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.margins(x);
        let w = DVector::from_iterator(
            z.len(),
            z.iter().zip(self.labels.iter()).map(|(&zi, &bi)| -bi * sigmoid(-zi)),
        );
        self.features.tr_mul(&w) / self.samples() + x * self.reg_mu
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let z = self.margins(x);
        let mut weighted = self.features.clone();
        for (i, &zi) in z.iter().enumerate() {
            let w = sigmoid(zi) * sigmoid(-zi);
            weighted.row_mut(i).scale_mut(w);
        }
        let h = self.features.tr_mul(&weighted) / self.samples()
            + DMatrix::identity(self.dim(), self.dim()) * self.reg_mu;
        Some(symmetrize(&h))
    }

    fn value_gap(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let r = x - y;
        let zy = self.margins(y);
        let dz = self.margins(&r);
        let rem: f64 = zy.iter().zip(dz.iter()).map(|(&zi, &di)| softplus_remainder(-zi, -di)).sum();
        self.gradient(y).dot(&r) + rem / self.samples() + 0.5 * self.reg_mu * r.norm_squared()
    }
}

/// Eigenvalue layout of a generated quadratic; all keep the endpoints `1` and `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    #[default]
    LogUniform,
    TwoCluster,
    Linear,
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn spectrum_values(rng: &mut ChaCha8Rng, n: usize, kappa: f64, spectrum: Spectrum) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            match spectrum {
                Spectrum::LogUniform => kappa.powf(u),
                Spectrum::TwoCluster => {
                    if i % 2 == 0 {
                        1.0 + u * (kappa.sqrt() - 1.0) * 0.1
                    } else {
                        kappa * (1.0 - u * 0.1 * (1.0 - 1.0 / kappa.sqrt()))
                    }
                }
                Spectrum::Linear => 1.0 + (kappa - 1.0) * i as f64 / (n - 1) as f64,
            }
        })
        .collect();
    values[0] = 1.0;
    values[n - 1] = kappa;
    values
}

/// Quadratic with eigenvalues in `[1, kappa]` (both attained), a random
/// rotation and a random minimizer; `mu = 1`, `L = kappa`, `L2 = 0`.
pub fn quadratic_problem(n: usize, kappa: f64, seed: u64, spectrum: Spectrum) -> Result<ProblemSpec> {
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::domain(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    if n == 1 && kappa != 1.0 {
        return Err(Error::domain("a one-dimensional quadratic has kappa = 1"));
    }
    let mut rng = rng_for(seed);
    let values = spectrum_values(&mut rng, n, kappa, spectrum);
    let q = random_rotation(&mut rng, n);
    let a = symmetrize(&(&q * DMatrix::from_diagonal(&DVector::from_vec(values)) * q.transpose()));
    let x_star = gaussian_vector(&mut rng, n);
    let objective = Quadratic {
        a,
        x_star: x_star.clone(),
        c: 0.0,
    };
    Ok(ProblemSpec {
        label: format!("quadratic_n{n}_k{kappa}_s{seed}"),
        objective: Arc::new(objective),
        mu: 1.0,
        lipschitz_l: kappa,
        lipschitz_l2: 0.0,
        f_star: Some(0.0),
        x_star: Some(x_star),
    })
}

/// Quadratic from an explicit SPD matrix; the constants come from its spectrum.
pub fn quadratic_from_matrix(label: &str, a: DMatrix<f64>, x_star: DVector<f64>) -> Result<ProblemSpec> {
    let op = SpdOperator::new(a)?;
    if op.dim() != x_star.len() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: x_star.len(),
        });
    }
    let eig = SymmetricEigen::new(op.matrix().clone()).eigenvalues;
    let mu = eig.min();
    let l = eig.max();
    Ok(ProblemSpec {
        label: label.to_string(),
        objective: Arc::new(Quadratic {
            a: op.matrix().clone(),
            x_star: x_star.clone(),
            c: 0.0,
        }),
        mu,
        lipschitz_l: l,
        lipschitz_l2: 0.0,
        f_star: Some(0.0),
        x_star: Some(x_star),
    })
}

/// Largest value of `|l'''|` for `l(s) = ln(1 + e^{-s})`.
pub const LOGISTIC_THIRD_DERIVATIVE_MAX: f64 = 0.096_225_044_864_937_63;

/// Seeded logistic regression with `m` samples; the minimizer is computed by
/// damped Newton and installed as the reference.
pub fn logistic_problem(n: usize, m: usize, reg_mu: f64, seed: u64) -> Result<ProblemSpec> {
    if n == 0 || m == 0 {
        return Err(Error::domain("dimension and sample count must be positive"));
    }
    if !(reg_mu > 0.0) || !reg_mu.is_finite() {
        return Err(Error::domain(format!("reg_mu must be positive, got {reg_mu}")));
    }
    let mut rng = rng_for(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let features = DMatrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let w = gaussian_vector(&mut rng, n) * 2.0;
    let labels = DVector::from_fn(m, |i, _| {
        let noise: f64 = rng.sample(StandardNormal);
        if features.row(i).dot(&w.transpose()) + 0.5 * noise >= 0.0 {
            1.0
        } else {
            -1.0
        }
    });
    if labels.iter().all(|&b| b == labels[0]) {
        return Err(Error::DegenerateData("all labels are identical".into()));
    }
    logistic_from_data(&format!("logistic_n{n}_m{m}_r{reg_mu}_s{seed}"), features, labels, reg_mu)
}

/// Logistic problem from explicit data; labels must be `+-1`.
pub fn logistic_from_data(label: &str, features: DMatrix<f64>, labels: DVector<f64>, reg_mu: f64) -> Result<ProblemSpec> {
    let m = features.nrows();
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: labels.len(),
        });
    }
    if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
        return Err(Error::DegenerateData("labels must be +1 or -1".into()));
    }
    if labels.iter().all(|&b| b == labels[0]) {
        return Err(Error::DegenerateData("all labels are identical".into()));
    }
    let gram = features.tr_mul(&features);
    let op_sq = SymmetricEigen::new(symmetrize(&gram)).eigenvalues.max().max(0.0);
    let max_row = (0..m).map(|i| features.row(i).norm()).fold(0.0, f64::max);
    let mf = m as f64;
    let mut problem = ProblemSpec {
        label: label.to_string(),
        objective: Arc::new(Logistic {
            features,
            labels,
            reg_mu,
        }),
        mu: reg_mu,
        lipschitz_l: reg_mu + op_sq / (4.0 * mf),
        lipschitz_l2: LOGISTIC_THIRD_DERIVATIVE_MAX * max_row * op_sq / mf,
        f_star: None,
        x_star: None,
    };
    let (f_star, x_star) = solve_reference(&problem, 1e-12)?;
    problem.f_star = Some(f_star);
    problem.x_star = Some(x_star);
    Ok(problem)
}

const REFERENCE_MAX_STEPS: usize = 200;

/// Minimizer by damped Newton until `|grad f| <= tol * mu * max(1, |x|)`,
/// followed by polishing steps while the gradient keeps shrinking.
/// Problems that already carry a reference return it unchanged.
pub fn solve_reference(problem: &ProblemSpec, tol: f64) -> Result<(f64, DVector<f64>)> {
    if let (Some(f), Some(x)) = (problem.f_star, &problem.x_star) {
        return Ok((f, x.clone()));
    }
    let n = problem.dim();
    let mut x = DVector::zeros(n);
    let mut g = problem.gradient(&x)?;
    for _ in 0..REFERENCE_MAX_STEPS {
        let target = tol * problem.mu * x.norm().max(1.0);
        if g.norm() <= target {
            for _ in 0..3 {
                let Some(hess) = problem.hessian(&x) else { break };
                let trial = &x - hess?.solve(&g);
                let gt = problem.gradient(&trial)?;
                if gt.norm() >= g.norm() {
                    break;
                }
                x = trial;
                g = gt;
            }
            return Ok((problem.value(&x)?, x));
        }
        let dir = match problem.hessian(&x) {
            Some(h) => h?.solve(&g),
            None => &g / problem.lipschitz_l,
        };
        let decrement = g.dot(&dir);
        let mut t = 1.0;
        loop {
            let trial = &x - &dir * t;
            if problem.value_gap(&x, &trial)? >= 0.25 * t * decrement {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence(format!("Newton line search stalled on {}", problem.label)));
            }
        }
        g = problem.gradient(&x)?;
    }
    Err(Error::NoConvergence(format!(
        "reference solve did not converge within {REFERENCE_MAX_STEPS} Newton steps on {}",
        problem.label
    )))
}

/// Serializable recipe for a generated problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemDescriptor {
    Quadratic {
        n: usize,
        kappa: f64,
        seed: u64,
        #[serde(default)]
        spectrum: Spectrum,
    },
    Logistic {
        n: usize,
        m_samples: usize,
        reg_mu: f64,
        seed: u64,
    },
}

impl ProblemDescriptor {
    pub fn build(&self) -> Result<ProblemSpec> {
        match *self {
            ProblemDescriptor::Quadratic { n, kappa, seed, spectrum } => quadratic_problem(n, kappa, seed, spectrum),
            ProblemDescriptor::Logistic {
                n,
                m_samples,
                reg_mu,
                seed,
            } => logistic_problem(n, m_samples, reg_mu, seed),
        }
    }
}

/// Quadratics with `n in {2, 10, 50}` and `kappa in {10, 100, 1000}`, plus
/// logistic problems with `m = 10 n`.
pub fn default_suite() -> Vec<ProblemDescriptor> {
    let mut out = Vec::new();
    let mut seed = 1;
    for n in [2, 10, 50] {
        for kappa in [10.0, 100.0, 1000.0] {
            out.push(ProblemDescriptor::Quadratic {
                n,
                kappa,
                seed,
                spectrum: Spectrum::LogUniform,
            });
            seed += 1;
        }
    }
    for n in [2, 10, 50] {
        out.push(ProblemDescriptor::Logistic {
            n,
            m_samples: 10 * n,
            reg_mu: 0.1,
            seed,
        });
        seed += 1;
    }
    out
}

/// `x_* + distance * u` for a seeded random unit vector `u`.
pub fn start_at_distance(problem: &ProblemSpec, distance: f64, seed: u64) -> Result<DVector<f64>> {
    let x_star = problem
        .x_star
        .as_ref()
        .ok_or_else(|| Error::MissingReference(format!("x_star unknown for {}", problem.label)))?;
    let mut rng = rng_for(seed);
    let u = gaussian_vector(&mut rng, problem.dim());
    Ok(x_star + u.normalize() * distance)
}

/// Point on a seeded ray from `x_*` with `H sqrt(f - f_*) <= target`,
/// found by halving the distance starting from `initial_distance`.
pub fn start_in_local_region(problem: &ProblemSpec, target: f64, initial_distance: f64, seed: u64) -> Result<DVector<f64>> {
    let h = problem.self_concordancy();
    let mut distance = initial_distance;
    for _ in 0..200 {
        let x = start_at_distance(problem, distance, seed)?;
        if h * problem.residual(&x)?.sqrt() <= target {
            return Ok(x);
        }
        distance *= 0.5;
    }
    Err(Error::NoConvergence("could not place a start point inside the local region".into()))
}
