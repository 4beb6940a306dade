// Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) fn symmetric_tolerance(m: &DMatrix<f64>) -> f64 {
    1e-9 * m.amax().max(1.0)
}

/// First off-diagonal pair violating symmetry, if any.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    let tol = symmetric_tolerance(m);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Some((i, j));
            }
        }
    }
    None
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Inverse of a symmetric positive-definite matrix through Cholesky.
/// `None` when the factorization fails.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    Some(symmetrize(&chol.inverse()))
}

/// Solve `m x = b` for symmetric positive-definite `m`.
pub(crate) fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = m.clone().cholesky()?;
    Some(chol.solve(b))
}

/// (min, max) eigenvalue of a symmetric matrix.
pub(crate) fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Positive definiteness: Cholesky succeeds and the spectrum is bounded away
/// from zero relative to its scale.
pub(crate) fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    if m.clone().cholesky().is_none() {
        return false;
    }
    let (min, max) = eigen_range(m);
    min > 1e-12 * max.abs().max(1.0)
}
