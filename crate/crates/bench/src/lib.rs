//! Deterministic fixtures shared by the benchmarks.

use bfgs_core::{CurvaturePair, DMatrix, DVector, SpdOperator};

/// `I + M M^T / n` with `M_ij = sin(i + 2j + 1)`.
pub fn spd_fixture(n: usize) -> SpdOperator {
    let m = DMatrix::from_fn(n, n, |i, j| ((i + 2 * j + 1) as f64).sin());
    let a = DMatrix::identity(n, n) + &m * m.transpose() / n as f64;
    SpdOperator::new(a).expect("fixture is SPD")
}

/// Pair `(delta, A delta)` for the SPD fixture `A`, so `<gamma, delta> > 0`.
pub fn pair_fixture(n: usize) -> CurvaturePair {
    let delta = DVector::from_fn(n, |i, _| ((3 * i + 1) as f64).cos());
    let gamma = spd_fixture(n).apply(&delta);
    CurvaturePair::new(delta, gamma).expect("positive curvature")
}
