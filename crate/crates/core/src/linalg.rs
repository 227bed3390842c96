//! Small dense-matrix helpers shared across modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Condition number above which inversions fall back to a ridge.
pub const RIDGE_CONDITION_LIMIT: f64 = 1e12;
/// Ridge strength relative to `trace / dim`.
pub const RIDGE_SCALE: f64 = 1e-8;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Entries `(i, j)` with `i != j`, in row-major order.
pub fn off_diagonals(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..m.ncols() {
            if i != j {
                out.push(m[(i, j)]);
            }
        }
    }
    out
}

/// Principal submatrix on the index set `s`, in the order given.
pub fn principal_submatrix(m: &DMatrix<f64>, s: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(s.len(), s.len(), |r, c| m[(s[r], s[c])])
}

/// `m^power` by repeated multiplication.
pub fn matrix_power(m: &DMatrix<f64>, power: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..power {
        out = &out * m;
    }
    out
}

/// Spectral radius by power iteration on `m + shift*I` for a nonnegative
/// symmetric `m`. The shift keeps negative eigenvalues from competing with
/// the Perron root.
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64, max_iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let shift = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let shifted = m + DMatrix::identity(n, n) * shift;
    // Deterministic, non-symmetric start so it is not orthogonal to the Perron vector.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = &shifted * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= tol {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda - shift
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Ratio of the largest to the smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse with the artifact-wide conditioning policy: when the condition
/// number exceeds [`RIDGE_CONDITION_LIMIT`], invert `m + λI` with
/// `λ = RIDGE_SCALE * |trace| / dim` instead.
pub fn regularized_inverse(m: &DMatrix<f64>, lag: Option<i64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let cond = condition_number(m);
    let candidate = if cond.is_finite() && cond <= RIDGE_CONDITION_LIMIT {
        m.clone()
    } else {
        let mut lambda = RIDGE_SCALE * m.trace().abs() / n as f64;
        if lambda == 0.0 {
            lambda = RIDGE_SCALE * max_abs(m);
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Singular { lag });
        }
        m + DMatrix::identity(n, n) * lambda
    };
    match candidate.try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => Ok(inv),
        _ => Err(Error::Singular { lag }),
    }
}
