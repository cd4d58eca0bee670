//! Dense symmetric-matrix helpers built on `nalgebra`.
//!
//! Determinants go through the symmetric eigendecomposition so that log-dets
//! stay stable for nearly singular inputs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as a singular matrix.
pub const DET_FLOOR: f64 = 1e-300;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `log2 |m|` for a symmetric positive definite matrix.
pub fn log2_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let ev = sym_eigenvalues(m);
    if let Some(&lo) = ev.first() {
        if lo <= DET_FLOOR {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {lo:.3e}"
            )));
        }
    }
    Ok(ev.iter().map(|l| l.log2()).sum())
}

/// `½ log2(|num| / |den|)`.
pub fn half_log2_det_ratio(num: &DMatrix<f64>, den: &DMatrix<f64>) -> Result<f64> {
    Ok(0.5 * (log2_det_spd(num)? - log2_det_spd(den)?))
}

pub fn check_square(m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() });
    }
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: m.ncols() });
    }
    Ok(())
}

/// Max absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Minimum eigenvalue of `a - b`.
pub fn min_eigenvalue_of_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    check_square(a, a.nrows())?;
    Ok(min_eigenvalue(&(a - b)))
}

/// `A ⪰ B` within `tol`: the smallest eigenvalue of `A - B` is at least `-tol`.
pub fn psd_order_check(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue_of_difference(a, b)? >= -tol)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Builds an `r×r` matrix from row-major data.
pub fn from_row_major(data: &[f64]) -> Result<DMatrix<f64>> {
    let r = (data.len() as f64).sqrt().round() as usize;
    if r * r != data.len() || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix with {} entries is not square",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(r, r, data))
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}
