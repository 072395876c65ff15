//! Symmetric positive definite operators, the BFGS update in primal and
//! inverse form, and the Bregman potential with its `alpha`/`beta`/`phi`
//! measures.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalarfn::omega_raw;

/// A Cholesky pivot must exceed this multiple of `trace / dim`.
pub const PIVOT_REL_TOL: f64 = 1e-12;
/// A curvature pair needs `<gamma, delta> > CURVATURE_REL_TOL |gamma| |delta|`.
pub const CURVATURE_REL_TOL: f64 = 1e-14;

/// Symmetric positive definite matrix with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct SpdOperator {
    matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let threshold = PIVOT_REL_TOL * m.trace().abs() / n.max(1) as f64;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d,
                threshold,
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl SpdOperator {
    /// Symmetrizes `matrix` and factors it; fails if it is not numerically
    /// positive definite.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_dim(matrix.nrows(), matrix.ncols())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let matrix = symmetrize(&matrix);
        let chol = cholesky(&matrix)?;
        Ok(SpdOperator { matrix, chol })
    }

    pub fn identity(n: usize) -> Self {
        SpdOperator {
            matrix: DMatrix::identity(n, n),
            chol: DMatrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("scale must be positive, got {c}")));
        }
        Ok(SpdOperator {
            matrix: DMatrix::identity(n, n) * c,
            chol: DMatrix::identity(n, n) * c.sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `M = L L^T`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// `M^{-1} v` by two triangular solves.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let y = self
            .chol
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a positive diagonal");
        self.chol
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `v^T M v`.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        let w = self.chol.tr_mul(v);
        w.norm_squared()
    }

    /// `s^T M^{-1} s`.
    pub fn dual_quad(&self, s: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .solve_lower_triangular(s)
            .expect("Cholesky factor has a positive diagonal");
        y.norm_squared()
    }

    pub fn inverse(&self) -> Result<SpdOperator> {
        let n = self.dim();
        let linv = self
            .chol
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("Cholesky factor has a positive diagonal");
        SpdOperator::new(linv.tr_mul(&linv))
    }

    pub fn scaled(&self, c: f64) -> Result<SpdOperator> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("scale must be positive, got {c}")));
        }
        Ok(SpdOperator {
            matrix: &self.matrix * c,
            chol: &self.chol * c.sqrt(),
        })
    }

    pub fn log_det(&self) -> f64 {
        self.chol.diagonal().iter().map(|d| 2.0 * d.ln()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// Primal norm `|u| = <Bu, u>^{1/2}` and dual norm `|s|_* = <s, B^{-1}s>^{1/2}`
/// induced by a fixed scaling operator `B`.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    pub scaling: SpdOperator,
}

impl OperatorContext {
    pub fn identity(n: usize) -> Self {
        OperatorContext {
            scaling: SpdOperator::identity(n),
        }
    }

    pub fn new(scaling: SpdOperator) -> Self {
        OperatorContext { scaling }
    }

    pub fn dim(&self) -> usize {
        self.scaling.dim()
    }

    pub fn norm_sq(&self, u: &DVector<f64>) -> f64 {
        self.scaling.quad(u)
    }

    pub fn dual_norm_sq(&self, s: &DVector<f64>) -> f64 {
        self.scaling.dual_quad(s)
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.norm_sq(u).sqrt()
    }

    pub fn dual_norm(&self, s: &DVector<f64>) -> f64 {
        self.dual_norm_sq(s).sqrt()
    }
}

/// A step `delta` and gradient change `gamma` with positive curvature.
#[derive(Clone, Debug)]
pub struct CurvaturePair {
    delta: DVector<f64>,
    gamma: DVector<f64>,
    inner: f64,
}

impl CurvaturePair {
    pub fn new(delta: DVector<f64>, gamma: DVector<f64>) -> Result<Self> {
        check_dim(delta.len(), gamma.len())?;
        let inner = gamma.dot(&delta);
        let threshold = CURVATURE_REL_TOL * gamma.norm() * delta.norm();
        if !(inner > threshold) {
            return Err(Error::CurvatureViolation { inner, threshold });
        }
        Ok(CurvaturePair {
            delta,
            gamma,
            inner,
        })
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    /// `<gamma, delta>`.
    pub fn inner(&self) -> f64 {
        self.inner
    }
}

/// Inverse BFGS update: `H+` satisfies the secant equation `H+ gamma = delta`.
pub fn inv_bfgs_update(h: &SpdOperator, pair: &CurvaturePair) -> Result<SpdOperator> {
    check_dim(h.dim(), pair.delta.len())?;
    let rho = 1.0 / pair.inner;
    let hg = h.apply(&pair.gamma);
    let ghg = pair.gamma.dot(&hg);
    let mut m = h.matrix.clone();
    m.ger(-rho, &hg, &pair.delta, 1.0);
    m.ger(-rho, &pair.delta, &hg, 1.0);
    m.ger((ghg * rho + 1.0) * rho, &pair.delta, &pair.delta, 1.0);
    SpdOperator::new(m)
}

/// Primal BFGS update: `G+` satisfies `G+ delta = gamma`.
pub fn primal_bfgs_update(g: &SpdOperator, pair: &CurvaturePair) -> Result<SpdOperator> {
    check_dim(g.dim(), pair.delta.len())?;
    let gd = g.apply(&pair.delta);
    let dgd = g.quad(&pair.delta);
    let mut m = g.matrix.clone();
    m.ger(-1.0 / dgd, &gd, &gd, 1.0);
    m.ger(1.0 / pair.inner, &pair.gamma, &pair.gamma, 1.0);
    SpdOperator::new(m)
}

/// Eigenvalues of `X^{-1} Y` in descending order, computed from the
/// congruent symmetric matrix `L^{-1} Y L^{-T}` with `X = L L^T`.
pub fn relative_eigenvalues(x: &SpdOperator, y: &SpdOperator) -> Result<Vec<f64>> {
    check_dim(x.dim(), y.dim())?;
    let l = x.cholesky_factor();
    let z = l
        .solve_lower_triangular(y.matrix())
        .expect("Cholesky factor has a positive diagonal");
    let w = l
        .solve_lower_triangular(&z.transpose())
        .expect("Cholesky factor has a positive diagonal");
    let eig = SymmetricEigen::new(symmetrize(&w));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Bregman distance `psi(X, Y) = sum_i omega(lambda_i - 1)` over the
/// eigenvalues of `X^{-1} Y`.
pub fn bregman_distance(x: &SpdOperator, y: &SpdOperator) -> Result<f64> {
    let values = relative_eigenvalues(x, y)?;
    if let Some(&min) = values.last() {
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: values.len() - 1,
                pivot: min,
                threshold: 0.0,
            });
        }
    }
    Ok(values.iter().map(|&l| omega_raw(l - 1.0)).sum())
}

/// `alpha_C`, `beta_C` and `phi_C = alpha - 1 - ln beta` of a pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMeasures {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

pub fn alpha_beta_phi(c: &SpdOperator, delta: &DVector<f64>, gamma: &DVector<f64>) -> Result<PairMeasures> {
    check_dim(c.dim(), delta.len())?;
    check_dim(c.dim(), gamma.len())?;
    let inner = gamma.dot(delta);
    if !(inner > 0.0) {
        return Err(Error::CurvatureViolation {
            inner,
            threshold: 0.0,
        });
    }
    let alpha = c.dual_quad(gamma) / inner;
    let beta = inner / c.quad(delta);
    // alpha - 1 - ln beta split into two nonnegative parts.
    let phi = (alpha - beta).max(0.0) + omega_raw(beta - 1.0);
    Ok(PairMeasures { alpha, beta, phi })
}

/// Dennis-More ratio `|gamma - C delta|_{C,*} / |delta|_C`.
pub fn dennis_more_ratio(c: &SpdOperator, delta: &DVector<f64>, gamma: &DVector<f64>) -> Result<f64> {
    check_dim(c.dim(), delta.len())?;
    check_dim(c.dim(), gamma.len())?;
    let residual = gamma - c.apply(delta);
    Ok((c.dual_quad(&residual) / c.quad(delta)).sqrt())
}

/// Both sides of the potential update identity
/// `psi(C, G) - psi(C, G+) = phi_C(delta, G delta) - phi_C(delta, gamma)`.
pub fn potential_decrement(c: &SpdOperator, g: &SpdOperator, pair: &CurvaturePair) -> Result<(f64, f64)> {
    let g_next = primal_bfgs_update(g, pair)?;
    let lhs = bregman_distance(c, g)? - bregman_distance(c, &g_next)?;
    let gd = g.apply(&pair.delta);
    let rhs = alpha_beta_phi(c, &pair.delta, &gd)?.phi - alpha_beta_phi(c, &pair.delta, &pair.gamma)?.phi;
    Ok((lhs, rhs))
}
