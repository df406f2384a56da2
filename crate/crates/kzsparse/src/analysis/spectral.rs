//! Spectral (operator) norms of dense matrices.

use nalgebra::{DMatrix, DVector};

const DENSE_FALLBACK_DIM: usize = 256;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 20_000;

/// Largest singular value of `b`. Small matrices go through a dense
/// symmetric eigensolver on `B^T B`; larger ones use power iteration with
/// a 1e-12 relative tolerance.
pub fn spectral_norm(b: &DMatrix<f64>) -> f64 {
    if b.nrows().max(b.ncols()) <= DENSE_FALLBACK_DIM {
        dense_spectral_norm(b)
    } else {
        power_iteration_norm(b, POWER_TOL, POWER_MAX_ITER)
    }
}

pub(crate) fn dense_spectral_norm(b: &DMatrix<f64>) -> f64 {
    let gram = b.transpose() * b;
    let eigen = gram.symmetric_eigen();
    eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &ev| acc.max(ev.max(0.0)))
        .sqrt()
}

pub(crate) fn power_iteration_norm(b: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = b.ncols();
    if n == 0 || b.nrows() == 0 {
        return 0.0;
    }
    // Deterministic, non-uniform start so it is not orthogonal to the top
    // singular vector of structured matrices.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i % 7) as f64) + 1e-3 * (i as f64));
    let norm = v.norm();
    v /= norm;
    let mut estimate = 0.0f64;
    for _ in 0..max_iter {
        let w = b * &v;
        let w_norm = w.norm();
        if w_norm == 0.0 {
            return 0.0;
        }
        let u = w / w_norm;
        let z = b.transpose() * u;
        let z_norm = z.norm();
        if z_norm == 0.0 {
            return 0.0;
        }
        let prev = estimate;
        estimate = z_norm;
        v = z / z_norm;
        // The absolute floor lets essentially-zero matrices terminate
        // instead of chasing relative convergence of roundoff noise.
        if (estimate - prev).abs() <= tol * estimate.max(f64::MIN_POSITIVE) + 1e-14 {
            break;
        }
    }
    estimate
}
