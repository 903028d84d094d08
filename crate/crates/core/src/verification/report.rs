//! Per-case verification and the per-method summary table.

use super::energy::{energy_score_ensemble, energy_score_mc, energy_score_mc_all_pairs};
use super::median::spatial_median;
use super::rank::{case_seed, multivariate_rank, reliability_index, RankHistogram};
use super::sharpness::determinant_sharpness2;
use crate::copula::{copula_sample, CopulaModel, MarginPair};
use crate::distributions::TruncBivariateNormal;
use crate::error::{EmosError, Result};
use crate::linalg::{dist, pearson, sample_mean_cov, Vec2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EsEstimator {
    /// Consecutive-pair spread term.
    #[default]
    Consecutive,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub es_samples: usize,
    pub rank_samples: usize,
    /// Sample size for the median point forecast; `None` reuses the energy
    /// score sample.
    pub median_samples: Option<usize>,
    pub es_estimator: EsEstimator,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { es_samples: 10_000, rank_samples: 100, median_samples: None, es_estimator: EsEstimator::Consecutive }
    }
}

/// What a method predicts for one case.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastSource {
    /// Closed-form bivariate law.
    Law(TruncBivariateNormal),
    /// Two margins joined by a Gaussian copula (`gamma = 0` gives the
    /// independent-margins method).
    Copula { margins: MarginPair, model: CopulaModel },
    /// The raw ensemble, used as its own sample.
    Ensemble(Vec<Vec2>),
}

impl ForecastSource {
    fn draw(&self, n: usize, seed: u64) -> Vec<Vec2> {
        match self {
            ForecastSource::Law(law) => law.sample_seeded(n, seed),
            ForecastSource::Copula { margins, model } => copula_sample(margins, model, n, seed),
            ForecastSource::Ensemble(members) => members.clone(),
        }
    }

    /// Number of rank-histogram bins this source produces.
    pub fn rank_bins(&self, cfg: &VerifyConfig) -> usize {
        match self {
            ForecastSource::Ensemble(m) => m.len() + 1,
            _ => cfg.rank_samples + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseVerification {
    pub obs: Vec2,
    pub energy_score: f64,
    pub rank: usize,
    pub sharpness: f64,
    pub median: Vec2,
    pub mean: Vec2,
}

/// Score one case. Draws for the energy score, the rank ensemble and the
/// median are derived from `seed`, so methods scored with the same seed see
/// the same random streams.
pub fn verify_case(source: &ForecastSource, obs: Vec2, cfg: &VerifyConfig, seed: u64) -> Result<CaseVerification> {
    let es_seed = case_seed(seed, 1);
    let rank_seed = case_seed(seed, 2);
    let tie_seed = case_seed(seed, 3);
    let median_seed = case_seed(seed, 4);

    if let ForecastSource::Ensemble(members) = source {
        let (mean, cov) = sample_mean_cov(members)
            .ok_or_else(|| EmosError::InsufficientData("ensemble needs at least 2 members".into()))?;
        return Ok(CaseVerification {
            obs,
            energy_score: energy_score_ensemble(members, obs)?,
            rank: multivariate_rank(members, obs, tie_seed),
            sharpness: determinant_sharpness2(&cov),
            median: spatial_median(members)?.point,
            mean,
        });
    }

    let sample = source.draw(cfg.es_samples, es_seed);
    let energy_score = match cfg.es_estimator {
        EsEstimator::Consecutive => energy_score_mc(&sample, obs)?,
        EsEstimator::AllPairs => energy_score_mc_all_pairs(&sample, obs)?,
    };
    let rank_ens = source.draw(cfg.rank_samples, rank_seed);
    let rank = multivariate_rank(&rank_ens, obs, tie_seed);
    let median = match cfg.median_samples {
        None => spatial_median(&sample)?.point,
        Some(n) => spatial_median(&source.draw(n, median_seed))?.point,
    };
    let (mean, sharpness) = match source {
        ForecastSource::Law(law) => {
            let m = law.moments();
            (m.kappa, determinant_sharpness2(&m.xi))
        }
        ForecastSource::Copula { margins, .. } => {
            let (_, cov) = sample_mean_cov(&sample)
                .ok_or_else(|| EmosError::InsufficientData("sample needs at least 2 draws".into()))?;
            ([margins[0].mean(), margins[1].mean()], determinant_sharpness2(&cov))
        }
        ForecastSource::Ensemble(_) => unreachable!(),
    };
    Ok(CaseVerification { obs, energy_score, rank, sharpness, median, mean })
}

/// Summary of one method over all verified cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_cases: usize,
    pub mean_es: f64,
    pub delta: f64,
    pub mean_ds: f64,
    pub ee_median: f64,
    pub ee_mean: f64,
    /// Correlation of the wind and temperature components of the point forecasts.
    pub rho_median: Option<f64>,
    pub rho_mean: Option<f64>,
    /// Correlation of wind and temperature forecast errors.
    pub rho_err_median: Option<f64>,
    pub rho_err_mean: Option<f64>,
}

fn correlations(forecasts: &[Vec2], obs: &[Vec2]) -> (Option<f64>, Option<f64>) {
    let (fw, ft): (Vec<f64>, Vec<f64>) = forecasts.iter().map(|f| (f[0], f[1])).unzip();
    let (ew, et): (Vec<f64>, Vec<f64>) = forecasts.iter().zip(obs).map(|(f, o)| (f[0] - o[0], f[1] - o[1])).unzip();
    (pearson(&fw, &ft), pearson(&ew, &et))
}

/// Aggregate per-case results; all cases must use the same rank bin count.
pub fn point_forecast_report(cases: &[CaseVerification], rank_bins: usize) -> Result<(ScoreReport, RankHistogram)> {
    if cases.is_empty() {
        return Err(EmosError::InsufficientData("no verified cases to summarize".into()));
    }
    let n = cases.len() as f64;
    let mut hist = RankHistogram::new(rank_bins);
    for c in cases {
        if c.rank == 0 || c.rank > rank_bins {
            return Err(EmosError::Domain(format!("rank {} outside 1..={rank_bins}", c.rank)));
        }
        hist.add(c.rank);
    }
    let obs: Vec<Vec2> = cases.iter().map(|c| c.obs).collect();
    let medians: Vec<Vec2> = cases.iter().map(|c| c.median).collect();
    let means: Vec<Vec2> = cases.iter().map(|c| c.mean).collect();
    let (rho_median, rho_err_median) = correlations(&medians, &obs);
    let (rho_mean, rho_err_mean) = correlations(&means, &obs);
    let report = ScoreReport {
        n_cases: cases.len(),
        mean_es: cases.iter().map(|c| c.energy_score).sum::<f64>() / n,
        delta: reliability_index(&hist),
        mean_ds: cases.iter().map(|c| c.sharpness).sum::<f64>() / n,
        ee_median: cases.iter().map(|c| dist(c.median, c.obs)).sum::<f64>() / n,
        ee_mean: cases.iter().map(|c| dist(c.mean, c.obs)).sum::<f64>() / n,
        rho_median,
        rho_mean,
        rho_err_median,
        rho_err_mean,
    };
    Ok((report, hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::UnivariateLaw;

    #[test]
    fn perfect_point_forecasts() {
        let cases: Vec<CaseVerification> = (0..10)
            .map(|i| {
                let o = [i as f64, 280.0 + (i % 3) as f64];
                CaseVerification { obs: o, energy_score: 0.0, rank: 1, sharpness: 0.0, median: o, mean: o }
            })
            .collect();
        let (r, h) = point_forecast_report(&cases, 3).unwrap();
        assert_eq!(r.ee_median, 0.0);
        assert_eq!(r.ee_mean, 0.0);
        assert!(r.rho_err_median.is_none() && r.rho_err_mean.is_none());
        assert!(r.rho_median.is_some());
        assert_eq!(h.counts, vec![10, 0, 0]);
    }

    #[test]
    fn raw_ensemble_uses_members() {
        let members = vec![[1.0, 280.0], [2.0, 281.0], [1.5, 279.0], [3.0, 282.0]];
        let obs = [2.0, 280.0];
        let src = ForecastSource::Ensemble(members.clone());
        let v = verify_case(&src, obs, &VerifyConfig::default(), 1).unwrap();
        assert_eq!(v.energy_score, energy_score_ensemble(&members, obs).unwrap());
        assert_eq!(v.mean, [1.875, 280.5]);
        assert!(v.rank >= 1 && v.rank <= 5);
        assert_eq!(src.rank_bins(&VerifyConfig::default()), 5);
    }

    #[test]
    fn law_and_copula_cases_are_deterministic() {
        let cfg = VerifyConfig { es_samples: 2000, ..Default::default() };
        let law = TruncBivariateNormal::new(2.0, 280.0, 1.5, 4.0, 0.6).unwrap();
        let a = verify_case(&ForecastSource::Law(law), [2.5, 281.0], &cfg, 9).unwrap();
        let b = verify_case(&ForecastSource::Law(law), [2.5, 281.0], &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean, law.moments().kappa);
        let margins = [UnivariateLaw::truncated(2.0, 1.2).unwrap(), UnivariateLaw::normal(280.0, 2.0).unwrap()];
        let src = ForecastSource::Copula { margins, model: CopulaModel::new(0.3).unwrap() };
        let c = verify_case(&src, [2.5, 281.0], &cfg, 9).unwrap();
        assert!(c.energy_score.is_finite() && c.sharpness > 0.0);
        assert_eq!(c.mean[1], 280.0);
    }
}
