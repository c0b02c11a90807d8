//! Small dense linear-algebra helpers.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Largest eigenvalue modulus of a square real matrix.
///
/// Closed form for 1×1 and 2×2 (trace/determinant), real Schur decomposition above.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::InvalidInput("matrix is not square".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::InvalidInput("non-finite entry".into()));
    }
    match m.nrows() {
        0 => Ok(0.0),
        1 => Ok(m[(0, 0)].abs()),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = 0.25 * tr * tr - det;
            if disc >= 0.0 {
                let r = disc.sqrt();
                Ok((0.5 * tr + r).abs().max((0.5 * tr - r).abs()))
            } else {
                // Complex pair: |λ|² = det.
                Ok(det.sqrt())
            }
        }
        _ => Ok(m.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)),
    }
}

/// Matrix from nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Nested rows from a matrix.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}
