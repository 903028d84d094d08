//! Fixed-size 2-D vector and matrix helpers.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

pub type Vec2 = [f64; 2];

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s)
    }

    pub fn symmetric(a: f64, off: f64, d: f64) -> Self {
        Mat2([[a, off], [off, d]])
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `self · self^T`
    pub fn gram(&self) -> Self {
        *self * self.transpose()
    }

    /// `self · inner · self^T`
    pub fn sandwich(&self, inner: &Mat2) -> Self {
        *self * *inner * self.transpose()
    }

    /// Average with the transpose.
    pub fn symmetrized(&self) -> Self {
        let m = self.0;
        let off = 0.5 * (m[0][1] + m[1][0]);
        Mat2([[m[0][0], off], [off, m[1][1]]])
    }

    /// Symmetric and strictly positive definite.
    pub fn is_positive_definite(&self) -> bool {
        let m = self.0;
        m[0][0] > 0.0 && m[1][1] > 0.0 && self.det() > 0.0 && m[0][0].is_finite() && m[1][1].is_finite()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Flatten in row-major order.
    pub fn to_array(&self) -> [f64; 4] {
        let m = self.0;
        [m[0][0], m[0][1], m[1][0], m[1][1]]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Mat2([[s[0], s[1]], [s[2], s[3]]])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

/// Unbiased (divisor n−1) sample mean and covariance of a point set.
/// Returns `None` when fewer than two points are given.
pub fn sample_mean_cov(points: &[Vec2]) -> Option<(Vec2, Mat2)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean = points
        .iter()
        .fold([0.0, 0.0], |acc, p| add(acc, *p))
        .map(|s| s / nf);
    let (mut sww, mut swt, mut stt) = (0.0, 0.0, 0.0);
    for p in points {
        let dw = p[0] - mean[0];
        let dt = p[1] - mean[1];
        sww += dw * dw;
        swt += dw * dt;
        stt += dt * dt;
    }
    let k = 1.0 / (nf - 1.0);
    Some((mean, Mat2::symmetric(sww * k, swt * k, stt * k)))
}

/// Pearson correlation; `None` if either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
