//! Gaussian copula joining the wind and temperature EMOS margins.
//!
//! The latent correlation is the empirical correlation of normal scores
//! `Φ⁻¹(F(y))` of historical observations under their fitted margins.

use crate::distributions::normal::{quantile_unchecked, std_normal_cdf};
use crate::distributions::UnivariateLaw;
use crate::error::{EmosError, Result};
use crate::linalg::{pearson, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Bound on the estimated latent correlation.
pub const MAX_ABS_CORRELATION: f64 = 0.999;

/// (wind margin, temperature margin)
pub type MarginPair = [UnivariateLaw; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub gamma: f64,
}

impl CopulaModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.abs() < 1.0 {
            Ok(Self { gamma })
        } else {
            Err(EmosError::Domain(format!("copula correlation must lie in (-1, 1), got {gamma}")))
        }
    }
}

/// Estimate the latent correlation from historical (margins, observation) pairs.
pub fn estimate_correlation(history: &[(MarginPair, Vec2)]) -> Result<CopulaModel> {
    let n = history.len();
    if n < 2 {
        return Err(EmosError::InsufficientData(format!(
            "copula correlation needs at least 2 historical cases, got {n}"
        )));
    }
    let eps = 1.0 / (2.0 * n as f64);
    let score = |law: &UnivariateLaw, y: f64| quantile_unchecked(law.cdf(y).clamp(eps, 1.0 - eps));
    let (zw, zt): (Vec<f64>, Vec<f64>) = history
        .iter()
        .map(|(m, obs)| (score(&m[0], obs[0]), score(&m[1], obs[1])))
        .unzip();
    let r = pearson(&zw, &zt).ok_or_else(|| {
        EmosError::InsufficientData("latent scores have zero variance; correlation undefined".into())
    })?;
    CopulaModel::new(r.clamp(-MAX_ABS_CORRELATION, MAX_ABS_CORRELATION))
}

pub fn copula_sample_with<R: Rng + ?Sized>(
    margins: &MarginPair,
    model: &CopulaModel,
    n: usize,
    rng: &mut R,
) -> Vec<Vec2> {
    let g = model.gamma;
    let h = (1.0 - g * g).sqrt();
    (0..n)
        .map(|_| {
            let z1: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let z2 = g * z1 + h * e;
            [transform(&margins[0], z1), transform(&margins[1], z2)]
        })
        .collect()
}

/// `n` draws from the copula law, seeded.
pub fn copula_sample(margins: &MarginPair, model: &CopulaModel, n: usize, rng_seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    copula_sample_with(margins, model, n, &mut rng)
}

fn transform(margin: &UnivariateLaw, z: f64) -> f64 {
    match margin.kind {
        // Φ then the normal quantile is the identity up to an affine map
        crate::distributions::LawKind::Normal => margin.location + margin.scale * z,
        crate::distributions::LawKind::ZeroTruncatedNormal => {
            let u = std_normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            margin.quantile_unchecked(u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spearman(x: &[f64], y: &[f64]) -> f64 {
        fn ranks(v: &[f64]) -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            let mut r = vec![0.0; v.len()];
            for (rank, &i) in idx.iter().enumerate() {
                r[i] = rank as f64;
            }
            r
        }
        pearson(&ranks(x), &ranks(y)).unwrap()
    }

    /// Two-sided KS statistic against a CDF.
    fn ks_stat(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn margins() -> MarginPair {
        [UnivariateLaw::truncated(1.5, 2.0).unwrap(), UnivariateLaw::normal(280.0, 2.5).unwrap()]
    }

    #[test]
    fn independence_copula() {
        let xs = copula_sample(&margins(), &CopulaModel::new(0.0).unwrap(), 10_000, 1);
        let (w, t): (Vec<f64>, Vec<f64>) = xs.iter().map(|x| (x[0], x[1])).unzip();
        assert!(pearson(&w, &t).unwrap().abs() < 0.05);
        assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn margins_pass_ks() {
        // 1% critical value ≈ 1.628 / √n
        let n = 10_000;
        let crit = 1.628 / (n as f64).sqrt();
        let m = margins();
        for gamma in [-0.8, 0.0, 0.5, 0.95] {
            let xs = copula_sample(&m, &CopulaModel::new(gamma).unwrap(), n, 7);
            let w: Vec<f64> = xs.iter().map(|x| x[0]).collect();
            let t: Vec<f64> = xs.iter().map(|x| x[1]).collect();
            assert!(ks_stat(&w, |v| m[0].cdf(v)) < crit, "wind gamma={gamma}");
            assert!(ks_stat(&t, |v| m[1].cdf(v)) < crit, "temp gamma={gamma}");
        }
    }

    #[test]
    fn normal_margins_keep_correlation() {
        let m = [UnivariateLaw::normal(0.0, 1.0).unwrap(), UnivariateLaw::normal(0.0, 1.0).unwrap()];
        let xs = copula_sample(&m, &CopulaModel::new(0.9).unwrap(), 10_000, 2);
        let (a, b): (Vec<f64>, Vec<f64>) = xs.iter().map(|x| (x[0], x[1])).unzip();
        assert!((pearson(&a, &b).unwrap() - 0.9).abs() < 0.03);
    }

    #[test]
    fn spearman_monotone_in_gamma() {
        let m = margins();
        let rho: Vec<f64> = [-0.8, 0.0, 0.8]
            .iter()
            .map(|&g| {
                let xs = copula_sample(&m, &CopulaModel::new(g).unwrap(), 5000, 3);
                let (a, b): (Vec<f64>, Vec<f64>) = xs.iter().map(|x| (x[0], x[1])).unzip();
                spearman(&a, &b)
            })
            .collect();
        assert!(rho[0] < rho[1] && rho[1] < rho[2], "{rho:?}");
    }

    #[test]
    fn estimator_limits() {
        let m = margins();
        // independent coordinates
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hist: Vec<(MarginPair, Vec2)> =
            (0..1000).map(|_| (m, [m[0].sample(&mut rng), m[1].sample(&mut rng)])).collect();
        assert!(estimate_correlation(&hist).unwrap().gamma.abs() < 0.1);
        // comonotone
        let hist: Vec<(MarginPair, Vec2)> = (1..200)
            .map(|i| {
                let p = i as f64 / 200.0;
                (m, [m[0].quantile(p).unwrap(), m[1].quantile(p).unwrap()])
            })
            .collect();
        assert!(estimate_correlation(&hist).unwrap().gamma > 0.99);
        // recovers a known latent correlation
        let xs = copula_sample(&m, &CopulaModel::new(0.6).unwrap(), 4000, 8);
        let hist: Vec<(MarginPair, Vec2)> = xs.into_iter().map(|x| (m, x)).collect();
        assert!((estimate_correlation(&hist).unwrap().gamma - 0.6).abs() < 0.05);
    }

    #[test]
    fn estimator_errors_and_winsorizing() {
        let m = margins();
        assert!(estimate_correlation(&[(m, [1.0, 280.0])]).is_err());
        // observations at the far edges give CDF values of 0 and 1
        let hist = vec![(m, [-1.0, 200.0]), (m, [1e3, 400.0]), (m, [1.0, 280.0])];
        let g = estimate_correlation(&hist).unwrap().gamma;
        assert!(g.is_finite() && g.abs() <= MAX_ABS_CORRELATION);
        assert!(CopulaModel::new(1.0).is_err());
    }
}
