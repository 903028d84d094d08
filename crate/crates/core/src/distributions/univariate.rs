//! Univariate normal and zero-truncated normal laws used by the independent
//! EMOS margins, with closed-form CRPS.

use super::normal::{
    frac_1_sqrt_pi, quantile_unchecked, std_normal_cdf, std_normal_log_cdf, std_normal_log_pdf,
    std_normal_pdf, std_normal_sf,
};
use crate::error::{domain, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Location/scale ratio below which the truncated-normal CRPS switches from
/// the closed form to quadrature (the closed form cancels catastrophically).
const CRPS_CLOSED_FORM_MIN_RATIO: f64 = -4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Normal,
    /// Normal law conditioned on being nonnegative.
    ZeroTruncatedNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateLaw {
    pub kind: LawKind,
    pub location: f64,
    pub scale: f64,
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        domain(format!("scale must be positive and finite, got {scale}"))
    }
}

impl UnivariateLaw {
    pub fn new(kind: LawKind, location: f64, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !location.is_finite() {
            return domain(format!("location must be finite, got {location}"));
        }
        Ok(Self { kind, location, scale })
    }

    pub fn normal(location: f64, scale: f64) -> Result<Self> {
        Self::new(LawKind::Normal, location, scale)
    }

    pub fn truncated(location: f64, scale: f64) -> Result<Self> {
        Self::new(LawKind::ZeroTruncatedNormal, location, scale)
    }

    fn ratio(&self) -> f64 {
        self.location / self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        match self.kind {
            LawKind::Normal => std_normal_cdf(z),
            LawKind::ZeroTruncatedNormal => {
                if x < 0.0 {
                    return 0.0;
                }
                let alpha = self.ratio();
                if alpha >= 0.0 {
                    let below = std_normal_sf(alpha); // Φ(−α)
                    ((std_normal_cdf(z) - below) / std_normal_cdf(alpha)).clamp(0.0, 1.0)
                } else {
                    // 1 − F(x) = Φ(−z)/Φ(α), evaluated in log space
                    let log_surv = std_normal_log_cdf(-z) - std_normal_log_cdf(alpha);
                    (-log_surv.exp_m1()).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile requires 0 < p < 1, got {p}"));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match self.kind {
            LawKind::Normal => self.location + self.scale * quantile_unchecked(p),
            LawKind::ZeroTruncatedNormal => {
                let alpha = self.ratio();
                let z = if alpha >= 0.0 {
                    let below = std_normal_sf(alpha);
                    quantile_unchecked(below + p * std_normal_cdf(alpha))
                } else {
                    -quantile_unchecked((1.0 - p) * std_normal_cdf(alpha))
                };
                (self.location + self.scale * z).max(0.0)
            }
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        let base = std_normal_log_pdf(z) - self.scale.ln();
        match self.kind {
            LawKind::Normal => base,
            LawKind::ZeroTruncatedNormal if x < 0.0 => f64::NEG_INFINITY,
            LawKind::ZeroTruncatedNormal => base - std_normal_log_cdf(self.ratio()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            LawKind::Normal => self.location,
            LawKind::ZeroTruncatedNormal => {
                self.location + self.scale * super::normal::inverse_mills(self.ratio())
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.kind {
            LawKind::Normal => s2,
            LawKind::ZeroTruncatedNormal => {
                let a = self.ratio();
                let lam = super::normal::inverse_mills(a);
                s2 * (1.0 - a * lam - lam * lam)
            }
        }
    }

    pub fn crps(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::Normal => crps_normal_unchecked(self.location, self.scale, y),
            LawKind::ZeroTruncatedNormal => crps_truncnormal_unchecked(self.location, self.scale, y),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // `random` is in [0, 1); map 0 to the smallest positive double
        self.quantile_unchecked(u.max(f64::MIN_POSITIVE))
    }
}

/// CRPS of `N(location, scale²)` at `y`.
pub fn crps_normal(location: f64, scale: f64, y: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(crps_normal_unchecked(location, scale, y))
}

pub(crate) fn crps_normal_unchecked(location: f64, scale: f64, y: f64) -> f64 {
    let z = (y - location) / scale;
    scale * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - frac_1_sqrt_pi())
}

/// CRPS of the zero-truncated normal with the given location and scale at `y`.
///
/// Observations below zero lie outside the support; the score is still the
/// integral definition (it grows linearly in `−y`) and a warning is logged.
pub fn crps_truncnormal(location: f64, scale: f64, y: f64) -> Result<f64> {
    check_scale(scale)?;
    if y < 0.0 {
        log::warn!("truncated-normal CRPS evaluated at y = {y} outside the support");
    }
    Ok(crps_truncnormal_unchecked(location, scale, y))
}

pub(crate) fn crps_truncnormal_unchecked(location: f64, scale: f64, y: f64) -> f64 {
    if y < 0.0 {
        // F vanishes below zero, so the integrand over [y, 0) is exactly one.
        return crps_truncnormal_unchecked(location, scale, 0.0) - y;
    }
    let alpha = location / scale;
    if alpha < CRPS_CLOSED_FORM_MIN_RATIO {
        return crps_truncnormal_quadrature(location, scale, y);
    }
    let z = (y - location) / scale;
    let p_alpha = std_normal_cdf(alpha);
    let bracket = z * p_alpha * (2.0 * std_normal_cdf(z) + p_alpha - 2.0)
        + 2.0 * std_normal_pdf(z) * p_alpha
        - frac_1_sqrt_pi() * std_normal_cdf(SQRT_2 * alpha);
    (scale / (p_alpha * p_alpha) * bracket).max(0.0)
}

/// `∫₀^∞ (F(t) − 1{t ≥ y})² dt` by adaptive Simpson, with `1 − F` taken in
/// log space so that deep truncation stays accurate.
fn crps_truncnormal_quadrature(location: f64, scale: f64, y: f64) -> f64 {
    let log_norm = std_normal_log_cdf(location / scale);
    let surv = |t: f64| (std_normal_log_cdf(-(t - location) / scale) - log_norm).exp();
    let below = |t: f64| {
        let s = surv(t);
        (1.0 - s) * (1.0 - s)
    };
    let above = |t: f64| {
        let s = surv(t);
        s * s
    };
    let mut upper = y.max(location).max(0.0) + scale;
    while surv(upper) > 1e-18 {
        upper += (upper - y).max(scale);
    }
    adaptive_simpson(&below, 0.0, y, 1e-12) + adaptive_simpson(&above, y, upper, 1e-12)
}

pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson quadrature of the CRPS integral, split at the
    /// observation, with the truncated CDF built directly from Φ differences.
    fn crps_trunc_oracle(mu: f64, sigma: f64, y: f64) -> f64 {
        let norm = std_normal_cdf(mu / sigma);
        let cdf = |t: f64| {
            if t < 0.0 {
                0.0
            } else {
                (std_normal_cdf((t - mu) / sigma) - std_normal_cdf(-mu / sigma)) / norm
            }
        };
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let hi = y.max(mu) + 12.0 * sigma;
        let below = simpson(&|t| cdf(t).powi(2), 0.0, y.max(0.0)) + (-y).max(0.0);
        let above = simpson(&|t| (1.0 - cdf(t)).powi(2), y.max(0.0), hi);
        below + above
    }

    #[test]
    fn crps_normal_standard_value() {
        let v = crps_normal(0.0, 1.0, 0.0).unwrap();
        let exact = 2.0 * std_normal_pdf(0.0) - 1.0 / std::f64::consts::PI.sqrt();
        assert!((v - exact).abs() < 1e-15);
        assert!((v - 0.233_695_0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn crps_normal_monte_carlo_kernel_form() {
        // E|X − y| − ½ E|X − X′| by simulation
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let law = UnivariateLaw::normal(0.0, 1.0).unwrap();
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let t1 = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        let t2 = xs.chunks(2).map(|c| (c[0] - c[1]).abs()).sum::<f64>() / (n / 2) as f64;
        let mc = t1 - 0.5 * t2;
        assert!((mc - crps_normal(0.0, 1.0, 0.0).unwrap()).abs() < 5e-3);
    }

    #[test]
    fn crps_normal_limits_and_translation() {
        assert!(crps_normal(1.0, 1e-9, 1.0).unwrap() < 1e-8);
        let a = crps_normal(2.0, 1.5, 0.3).unwrap();
        let b = crps_normal(7.0, 1.5, 5.3).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(crps_normal(0.0, 0.0, 1.0).is_err());
        assert!(crps_normal(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn crps_trunc_far_from_truncation_matches_normal() {
        let a = crps_truncnormal(50.0, 1.0, 50.0).unwrap();
        let b = crps_normal(50.0, 1.0, 50.0).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn crps_trunc_matches_quadrature_oracle() {
        let v = crps_truncnormal(0.0, 1.0, 1.0).unwrap();
        let o = crps_trunc_oracle(0.0, 1.0, 1.0);
        assert!((v - o).abs() < 1e-6, "{v} vs {o}");
        for &(mu, s, y) in &[(1.0, 2.0, 0.0), (-1.0, 1.0, 0.5), (3.0, 0.5, 4.0), (-3.5, 1.0, 0.2)] {
            let v = crps_truncnormal(mu, s, y).unwrap();
            let o = crps_trunc_oracle(mu, s, y);
            assert!((v - o).abs() < 1e-6, "({mu},{s},{y}): {v} vs {o}");
        }
    }

    #[test]
    fn crps_trunc_quadrature_branch_agrees_with_closed_form_at_switch() {
        for y in [0.0, 0.1, 0.5, 2.0] {
            let cf = crps_truncnormal(-3.99, 1.0, y).unwrap();
            let q = crps_truncnormal_quadrature(-3.99, 1.0, y);
            assert!((cf - q).abs() < 1e-8, "y={y}: {cf} vs {q}");
        }
        // deep truncation: the law is close to an exponential with rate |α|/σ
        let v = crps_truncnormal(-20.0, 1.0, 0.05).unwrap();
        assert!(v.is_finite() && v > 0.0 && v < 0.1);
    }

    #[test]
    fn crps_trunc_negative_observation_is_extended() {
        let at0 = crps_truncnormal(1.0, 1.0, 0.0).unwrap();
        let neg = crps_truncnormal(1.0, 1.0, -0.5).unwrap();
        assert!((neg - at0 - 0.5).abs() < 1e-12);
        let o = crps_trunc_oracle(1.0, 1.0, -0.5);
        assert!((neg - o).abs() < 1e-6);
    }

    #[test]
    fn crps_trunc_minimized_at_median() {
        let law = UnivariateLaw::truncated(0.7, 1.3).unwrap();
        let median = law.quantile(0.5).unwrap();
        let (mut best_y, mut best) = (0.0, f64::INFINITY);
        for i in 0..=40_000 {
            let y = i as f64 * 1e-4;
            let v = law.crps(y);
            if v < best {
                best = v;
                best_y = y;
            }
        }
        assert!((best_y - median).abs() < 2e-3, "grid {best_y} median {median}");
    }

    #[test]
    fn univariate_cdf_quantile() {
        let n01 = UnivariateLaw::normal(0.0, 1.0).unwrap();
        assert_eq!(n01.cdf(0.0), 0.5);
        let half = UnivariateLaw::truncated(0.0, 1.0).unwrap();
        // half-normal median by bisection on its cdf 2Φ(x) − 1
        let (mut lo, mut hi) = (0.0, 3.0);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if 2.0 * std_normal_cdf(m) - 1.0 < 0.5 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let q = half.quantile(0.5).unwrap();
        assert!((q - 0.674_489_8).abs() < 1e-7 && (q - lo).abs() < 1e-10);
        let far = UnivariateLaw::truncated(5.0, 1.0).unwrap();
        assert!((far.cdf(5.0) - 0.5).abs() < 1e-6);
        assert_eq!(half.cdf(-0.1), 0.0);
        assert!(half.quantile(1.0).is_err());
        assert!(half.quantile(0.0).is_err());
    }

    #[test]
    fn univariate_inverse_relation() {
        let laws = [
            UnivariateLaw::normal(280.0, 2.5).unwrap(),
            UnivariateLaw::truncated(3.0, 2.0).unwrap(),
            UnivariateLaw::truncated(-2.0, 1.0).unwrap(),
            UnivariateLaw::truncated(-10.0, 1.0).unwrap(),
        ];
        for law in laws {
            for i in 1..1000 {
                let p = i as f64 / 1000.0;
                let x = law.quantile(p).unwrap();
                assert!((law.cdf(x) - p).abs() <= 1e-10, "{law:?} p={p}");
            }
        }
    }

    #[test]
    fn truncated_log_pdf_support() {
        let law = UnivariateLaw::truncated(1.0, 1.0).unwrap();
        assert_eq!(law.log_pdf(-1e-9), f64::NEG_INFINITY);
        assert!(law.log_pdf(0.0).is_finite());
    }
}
