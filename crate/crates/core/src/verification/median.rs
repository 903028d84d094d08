//! Spatial (geometric) median of a planar point set.
//!
//! Weiszfeld iteration with the Vardi–Zhang correction, which handles
//! iterates that land exactly on a data point. Started from the
//! componentwise median.

use crate::error::{EmosError, Result};
use crate::linalg::{dist, Vec2};

const MAX_ITER: usize = 10_000;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMedian {
    pub point: Vec2,
    /// `false` when all points lie on one line, where the minimizer need not
    /// be unique.
    pub unique: bool,
    pub iterations: usize,
}

/// `Σ ‖α − x_i‖`
pub fn median_objective(points: &[Vec2], alpha: Vec2) -> f64 {
    points.iter().map(|x| dist(*x, alpha)).sum()
}

fn componentwise_median(points: &[Vec2]) -> Vec2 {
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let mut v: Vec<f64> = points.iter().map(|p| p[c]).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        *o = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    }
    out
}

fn collinear(points: &[Vec2]) -> bool {
    let p0 = points[0];
    let Some(&p1) = points.iter().find(|p| dist(**p, p0) > 0.0) else {
        return true;
    };
    let (dx, dy) = (p1[0] - p0[0], p1[1] - p0[1]);
    let scale = dx.hypot(dy);
    points.iter().all(|p| {
        let cross = dx * (p[1] - p0[1]) - dy * (p[0] - p0[0]);
        cross.abs() <= 1e-12 * scale * (dist(*p, p0) + scale)
    })
}

pub fn spatial_median(points: &[Vec2]) -> Result<SpatialMedian> {
    if points.is_empty() {
        return Err(EmosError::InsufficientData("spatial median of an empty point set".into()));
    }
    let unique = !collinear(points);
    let mut y = componentwise_median(points);
    let mut f = median_objective(points, y);
    let scale = points.iter().map(|p| dist(*p, y)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut num = [0.0, 0.0];
        let mut wsum = 0.0;
        let mut resid = [0.0, 0.0];
        let mut coincident = 0.0;
        for x in points {
            let d = dist(*x, y);
            if d <= 1e-15 * scale {
                coincident += 1.0;
                continue;
            }
            let w = 1.0 / d;
            num[0] += w * x[0];
            num[1] += w * x[1];
            resid[0] += w * (x[0] - y[0]);
            resid[1] += w * (x[1] - y[1]);
            wsum += w;
        }
        if wsum == 0.0 {
            break; // all points coincide with y
        }
        let t = [num[0] / wsum, num[1] / wsum];
        let r = resid[0].hypot(resid[1]);
        if r <= coincident {
            break; // y is a data point satisfying the optimality condition
        }
        let next = if coincident > 0.0 {
            let gamma = coincident / r;
            let keep = 1.0 - gamma;
            [keep * t[0] + gamma * y[0], keep * t[1] + gamma * y[1]]
        } else {
            t
        };
        let f_next = median_objective(points, next);
        if !(f_next <= f) {
            // rounding stall: try a shorter step along the same direction
            let half = [0.5 * (y[0] + next[0]), 0.5 * (y[1] + next[1])];
            let f_half = median_objective(points, half);
            if f_half < f {
                y = half;
                f = f_half;
                continue;
            }
            break;
        }
        let step = dist(next, y);
        let improvement = f - f_next;
        y = next;
        f = f_next;
        if step <= REL_TOL * scale && improvement <= REL_TOL * f {
            break;
        }
    }
    Ok(SpatialMedian { point: y, unique, iterations })
}
