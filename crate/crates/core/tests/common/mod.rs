//! Independent numerical oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use bivemos::distributions::TruncBivariateNormal;
use bivemos::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Φ from the complementary error function.
pub fn phi_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Density of the truncated bivariate normal written out from scratch.
pub fn tbn_density(mu: Vec2, s2w: f64, s2t: f64, swt: f64, x: Vec2) -> f64 {
    if x[0] < 0.0 {
        return 0.0;
    }
    let det = s2w * s2t - swt * swt;
    let (dw, dt) = (x[0] - mu[0], x[1] - mu[1]);
    let q = (s2t * dw * dw - 2.0 * swt * dw * dt + s2w * dt * dt) / det;
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt() * phi_cdf(mu[0] / s2w.sqrt()))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let d = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                weights[i] = 2.0 / ((1.0 - x * x) * d * d);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

/// Composite tensor Gauss–Legendre rule over a rectangle.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, xr: (f64, f64), yr: (f64, f64), panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let axis = |(a, b): (f64, f64)| -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let lo = a + p as f64 * h;
                nodes.iter().zip(&weights).map(move |(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
            })
            .collect()
    };
    let (xs, ys) = (axis(xr), axis(yr));
    xs.iter().map(|(x, wx)| wx * ys.iter().map(|(y, wy)| wy * f(*x, *y)).sum::<f64>()).sum()
}

/// A random valid law with truncation ratio μ_W/σ_W in `alpha`.
pub fn random_law<R: Rng>(r: &mut R, alpha: (f64, f64)) -> TruncBivariateNormal {
    let sw = r.random_range(0.5..3.0);
    let st = r.random_range(0.5..3.0);
    let rho = r.random_range(-0.85..0.85);
    let a = r.random_range(alpha.0..alpha.1);
    TruncBivariateNormal::new(a * sw, r.random_range(270.0..290.0), sw * sw, st * st, rho * sw * st).unwrap()
}

/// Plain rejection sampling from the untruncated normal: sample mean,
/// covariance entries (ww, tt, wt) and the standard error of each of the
/// five estimates.
pub struct RejectionMoments {
    pub mean: Vec2,
    pub cov: [f64; 3],
    pub se: [f64; 5],
    pub accepted: usize,
}

pub fn rejection_moments(law: &TruncBivariateNormal, accepted: usize, seed: u64) -> RejectionMoments {
    let mut r = rng(seed);
    let (s2w, s2t, swt) = (law.sigma2_w, law.sigma2_t, law.sigma_wt);
    let l11 = s2w.sqrt();
    let l21 = swt / l11;
    let l22 = (s2t - l21 * l21).sqrt();
    let mut xs = Vec::with_capacity(accepted);
    while xs.len() < accepted {
        let z1: f64 = r.sample(StandardNormal);
        let z2: f64 = r.sample(StandardNormal);
        let w = law.mu_w + l11 * z1;
        if w >= 0.0 {
            xs.push([w, law.mu_t + l21 * z1 + l22 * z2]);
        }
    }
    let n = accepted as f64;
    let mean = [xs.iter().map(|x| x[0]).sum::<f64>() / n, xs.iter().map(|x| x[1]).sum::<f64>() / n];
    let prods: Vec<[f64; 3]> = xs
        .iter()
        .map(|x| {
            let (a, b) = (x[0] - mean[0], x[1] - mean[1]);
            [a * a, b * b, a * b]
        })
        .collect();
    let mut cov = [0.0; 3];
    let mut cov_se = [0.0; 3];
    for k in 0..3 {
        cov[k] = prods.iter().map(|p| p[k]).sum::<f64>() / (n - 1.0);
        let v = prods.iter().map(|p| (p[k] - cov[k]).powi(2)).sum::<f64>() / (n - 1.0);
        cov_se[k] = (v / n).sqrt();
    }
    let se = [(cov[0] / n).sqrt(), (cov[1] / n).sqrt(), cov_se[0], cov_se[1], cov_se[2]];
    RejectionMoments { mean, cov, se, accepted }
}

/// Δ of a histogram built from `cases` uniform ranks over `bins` bins.
fn uniform_delta<R: Rng>(r: &mut R, cases: usize, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for _ in 0..cases {
        counts[r.random_range(0..bins)] += 1;
    }
    let u = 1.0 / bins as f64;
    counts.iter().map(|&c| (c as f64 / cases as f64 - u).abs()).sum()
}

/// Empirical `q`-quantile of Δ under exact uniformity (multinomial simulation).
pub fn uniform_delta_quantile(cases: usize, bins: usize, q: f64, reps: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut d: Vec<f64> = (0..reps).map(|_| uniform_delta(&mut r, cases, bins)).collect();
    d.sort_by(f64::total_cmp);
    d[((q * reps as f64).ceil() as usize).min(reps) - 1]
}

pub fn median_objective(points: &[Vec2], a: Vec2) -> f64 {
    points.iter().map(|p| ((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt()).sum()
}

/// Brute-force spatial median: evaluate the objective on a grid, then zoom
/// in around the best node until the cell is below `tol`.
pub fn grid_median(points: &[Vec2], tol: f64) -> Vec2 {
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut half = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0).max(1e-12);
    let k = 40;
    while half > tol {
        let step = half / k as f64;
        let mut best = (f64::INFINITY, center);
        for i in -k..=k {
            for j in -k..=k {
                let a = [center[0] + i as f64 * step, center[1] + j as f64 * step];
                let v = median_objective(points, a);
                if v < best.0 {
                    best = (v, a);
                }
            }
        }
        center = best.1;
        half = 4.0 * step;
    }
    center
}
