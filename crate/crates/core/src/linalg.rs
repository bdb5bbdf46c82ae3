//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{DccmError, Result};

/// Largest condition number accepted for an evaluated metric dual `W(x)`.
pub const MAX_CONDITION: f64 = 1e12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Inverse of a symmetric matrix that must be positive definite and
/// well-conditioned; the result is symmetrized.
pub fn spd_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ev = sym_eigenvalues(w);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        return Err(DccmError::NonPositiveMetric { lambda_min: lo });
    }
    let condition = hi / lo;
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(DccmError::SingularMetric { condition });
    }
    let chol = symmetrize(w)
        .cholesky()
        .ok_or(DccmError::SingularMetric { condition })?;
    Ok(symmetrize(&chol.inverse()))
}

/// Inverse of a symmetric, possibly indefinite matrix, rejecting numerically
/// singular input.
pub fn sym_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ev = sym_eigenvalues(w);
    let abs_min = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let abs_max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let condition = abs_max / abs_min;
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(DccmError::SingularMetric { condition });
    }
    let inv = symmetrize(w)
        .try_inverse()
        .ok_or(DccmError::SingularMetric { condition })?;
    Ok(symmetrize(&inv))
}
