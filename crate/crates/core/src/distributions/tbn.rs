//! Bivariate normal law with its first (wind) coordinate truncated below at zero.

use super::normal::{inverse_mills, std_normal_cdf, std_normal_log_cdf};
use crate::error::{EmosError, Result};
use crate::linalg::{Mat2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Acceptance probability under which plain rejection is replaced by
/// sampling the wind coordinate from its one-sided truncated marginal.
const REJECTION_MIN_ACCEPTANCE: f64 = 0.05;

/// `N₂⁰(μ, Σ)`: location `μ = (μ_W, μ_T)`, scale matrix `Σ`, support `x_W ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncBivariateNormal {
    pub mu_w: f64,
    pub mu_t: f64,
    pub sigma2_w: f64,
    pub sigma2_t: f64,
    pub sigma_wt: f64,
}

/// Mean vector and covariance matrix of a predictive law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub kappa: Vec2,
    pub xi: Mat2,
}

impl TruncBivariateNormal {
    pub fn new(mu_w: f64, mu_t: f64, sigma2_w: f64, sigma2_t: f64, sigma_wt: f64) -> Result<Self> {
        let law = Self { mu_w, mu_t, sigma2_w, sigma2_t, sigma_wt };
        law.validate()?;
        Ok(law)
    }

    pub fn from_location_scale(location: Vec2, scale: &Mat2) -> Result<Self> {
        let s = scale.symmetrized();
        Self::new(location[0], location[1], s.0[0][0], s.0[1][1], s.0[0][1])
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.mu_w, self.mu_t, self.sigma2_w, self.sigma2_t, self.sigma_wt]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(EmosError::InvalidLaw("non-finite parameter".into()));
        }
        if !(self.sigma2_w > 0.0 && self.sigma2_t > 0.0) || self.det() <= 0.0 {
            return Err(EmosError::InvalidLaw(format!(
                "scale matrix [[{}, {}], [{}, {}]] is not positive definite",
                self.sigma2_w, self.sigma_wt, self.sigma_wt, self.sigma2_t
            )));
        }
        Ok(())
    }

    pub fn location(&self) -> Vec2 {
        [self.mu_w, self.mu_t]
    }

    pub fn scale_matrix(&self) -> Mat2 {
        Mat2::symmetric(self.sigma2_w, self.sigma_wt, self.sigma2_t)
    }

    fn det(&self) -> f64 {
        self.sigma2_w * self.sigma2_t - self.sigma_wt * self.sigma_wt
    }

    /// `μ_W / σ_W`; `Φ` of this is the untruncated mass of `{x_W ≥ 0}`.
    pub fn truncation_ratio(&self) -> f64 {
        self.mu_w / self.sigma2_w.sqrt()
    }

    /// Log density; `−∞` outside the support.
    pub fn log_pdf(&self, x: Vec2) -> f64 {
        if x[0] < 0.0 {
            return f64::NEG_INFINITY;
        }
        let det = self.det();
        let dw = x[0] - self.mu_w;
        let dt = x[1] - self.mu_t;
        let quad = (self.sigma2_t * dw * dw - 2.0 * self.sigma_wt * dw * dt + self.sigma2_w * dt * dt) / det;
        -0.5 * quad - (2.0 * PI).ln() - 0.5 * det.ln() - std_normal_log_cdf(self.truncation_ratio())
    }

    pub fn pdf(&self, x: Vec2) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn moments(&self) -> MomentPair {
        let sigma_w = self.sigma2_w.sqrt();
        let alpha = self.mu_w / sigma_w;
        let lam = inverse_mills(alpha);
        let kappa = [self.mu_w + lam * sigma_w, self.mu_t + lam * self.sigma_wt / sigma_w];
        let shrink = alpha * lam + lam * lam;
        let correction = Mat2::symmetric(
            self.sigma2_w,
            self.sigma_wt,
            self.sigma_wt * self.sigma_wt / self.sigma2_w,
        );
        MomentPair { kappa, xi: self.scale_matrix() - correction.scale(shrink) }
    }

    /// Probability that an untruncated draw lands in the support.
    pub fn acceptance_probability(&self) -> f64 {
        std_normal_cdf(self.truncation_ratio())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let sigma_w = self.sigma2_w.sqrt();
        if self.acceptance_probability() >= REJECTION_MIN_ACCEPTANCE {
            // Cholesky of Σ
            let l21 = self.sigma_wt / sigma_w;
            let l22 = (self.sigma2_t - l21 * l21).max(0.0).sqrt();
            loop {
                let z1: f64 = rng.sample(StandardNormal);
                let w = self.mu_w + sigma_w * z1;
                if w >= 0.0 {
                    let z2: f64 = rng.sample(StandardNormal);
                    return [w, self.mu_t + l21 * z1 + l22 * z2];
                }
            }
        }
        let lower = -self.mu_w / sigma_w;
        let z1 = sample_std_normal_tail(rng, lower);
        let w = (self.mu_w + sigma_w * z1).max(0.0);
        let cond_mean = self.mu_t + self.sigma_wt / sigma_w * z1;
        let cond_sd = (self.sigma2_t - self.sigma_wt * self.sigma_wt / self.sigma2_w).max(0.0).sqrt();
        let z2: f64 = rng.sample(StandardNormal);
        [w, cond_mean + cond_sd * z2]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec2> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// `n` i.i.d. draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Vec<Vec2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(&mut rng, n)
    }
}

/// Draw `Z ~ N(0,1)` conditioned on `Z ≥ lower`, for `lower > 0`, using an
/// exponential proposal with the optimal rate.
fn sample_std_normal_tail<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let z = lower + rng.sample(exp);
        let u: f64 = rng.random();
        if u <= (-0.5 * (z - rate) * (z - rate)).exp() {
            return z;
        }
    }
}
