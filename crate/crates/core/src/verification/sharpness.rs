use crate::error::{EmosError, Result};
use crate::linalg::Mat2;
use nalgebra::DMatrix;

/// Determinant sharpness `det(Σ)^{1/(2d)}` of a `d × d` covariance matrix
/// given by rows. The matrix is symmetrized first and a negative determinant
/// (numerical asymmetry or rounding) is clamped to zero.
pub fn determinant_sharpness(cov: &[Vec<f64>]) -> Result<f64> {
    let d = cov.len();
    if d == 0 || cov.iter().any(|row| row.len() != d) {
        return Err(EmosError::Domain("covariance must be a nonempty square matrix".into()));
    }
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
    Ok(m.determinant().max(0.0).powf(1.0 / (2.0 * d as f64)))
}

pub fn determinant_sharpness2(cov: &Mat2) -> f64 {
    cov.symmetrized().det().max(0.0).powf(0.25)
}
