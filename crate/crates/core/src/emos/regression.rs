//! Ordinary least squares used to initialize the location parameters.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold below which the design is treated as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Regress `y` on the columns of `x` plus an intercept.
///
/// Columns are centered before solving; returns `(intercept, slopes)` or
/// `None` when the centered design is rank deficient.
pub fn ols_with_intercept(x: &[Vec<f64>], y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = y.len();
    let p = x.first().map_or(0, Vec::len);
    if n <= p {
        return None;
    }
    let nf = n as f64;
    let col_means: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    if p == 0 {
        return Some((y_mean, Vec::new()));
    }
    let design = DMatrix::from_fn(n, p, |i, j| x[i][j] - col_means[j]);
    let rhs = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= RANK_TOL * smax {
        return None;
    }
    let beta = svd.solve(&rhs, RANK_TOL * smax).ok()?;
    let intercept = y_mean - beta.iter().zip(&col_means).map(|(b, m)| b * m).sum::<f64>();
    Some((intercept, beta.iter().copied().collect()))
}
