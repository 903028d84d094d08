//! Independent univariate EMOS for wind speed (zero-truncated normal) and
//! temperature (normal), estimated by minimum mean CRPS.
//!
//! Predictive law for variable `v`: location `a + Σ_k b_k · (group-k sum of v)`
//! and variance `c + d · s²_v`, where `s²_v` is the ensemble variance of `v`.
//! `c` and `d` are optimized as squares so they stay nonnegative.

use super::case::{CaseFeatures, ForecastCase};
use super::regression::ols_with_intercept;
use super::GroupSpec;
use crate::distributions::{LawKind, UnivariateLaw};
use crate::error::{EmosError, Result};
use crate::optimizer::{minimize, OptimizerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Wind,
    Temp,
}

impl Variable {
    pub fn index(self) -> usize {
        match self {
            Variable::Wind => 0,
            Variable::Temp => 1,
        }
    }

    pub fn law_kind(self) -> LawKind {
        match self {
            Variable::Wind => LawKind::ZeroTruncatedNormal,
            Variable::Temp => LawKind::Normal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateEmosParams {
    pub variable: Variable,
    pub intercept: f64,
    pub member_coeffs: Vec<f64>,
    pub var_c: f64,
    pub var_d: f64,
}

pub fn univariate_free_params(m: usize) -> usize {
    m + 3
}

impl UnivariateEmosParams {
    pub fn location(&self, f: &CaseFeatures) -> f64 {
        let i = self.variable.index();
        self.intercept + self.member_coeffs.iter().zip(&f.group_sums).map(|(b, s)| b * s[i]).sum::<f64>()
    }

    pub fn variance(&self, f: &CaseFeatures) -> f64 {
        let i = self.variable.index();
        self.var_c + self.var_d * f.spread.0[i][i]
    }

    pub fn law_for_features(&self, f: &CaseFeatures) -> Result<UnivariateLaw> {
        let var = self.variance(f);
        if !(var > 0.0) {
            return Err(EmosError::InvalidLaw(format!("predictive variance {var} is not positive")));
        }
        UnivariateLaw::new(self.variable.law_kind(), self.location(f), var.sqrt())
    }

    pub fn predictive_law(&self, case: &ForecastCase, groups: &GroupSpec) -> Result<UnivariateLaw> {
        if groups.n_groups() != self.member_coeffs.len() {
            return Err(EmosError::Domain("member coefficients do not match the group layout".into()));
        }
        self.law_for_features(&CaseFeatures::new(case, groups)?)
    }

    /// Mean CRPS over the cases that carry observations.
    pub fn mean_crps(&self, features: &[CaseFeatures]) -> f64 {
        let i = self.variable.index();
        let mut total = 0.0;
        let mut n = 0usize;
        for f in features {
            let Some(obs) = f.observation else { continue };
            n += 1;
            match self.law_for_features(f) {
                Ok(law) => total += law.crps(obs[i]),
                Err(_) => return f64::INFINITY,
            }
        }
        total / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct UnivariateFitConfig {
    pub optimizer: OptimizerConfig,
    /// Constrain member coefficients to be nonnegative (optimized as squares).
    pub nonneg_coeffs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateFit {
    pub params: UnivariateEmosParams,
    pub score: f64,
    pub initial_score: f64,
    pub converged: bool,
    pub evals: usize,
    pub regression_fallback: bool,
}

pub fn fit_univariate(
    training: &[ForecastCase],
    variable: Variable,
    groups: &GroupSpec,
    cfg: &UnivariateFitConfig,
) -> Result<UnivariateFit> {
    let features = CaseFeatures::for_training(training, groups)?;
    fit_univariate_features(&features, variable, groups, cfg)
}

/// Optimizer coordinates: `[a', b'_1..b'_m, √c, √d]` with standardized
/// group sums (`b'_k = b_k sd_k`, `a' = a + Σ b_k mean_k`). With
/// `nonneg_coeffs`, `b'_k` is itself a square.
struct Coords<'a> {
    means: Vec<f64>,
    sds: Vec<f64>,
    cfg: &'a UnivariateFitConfig,
    variable: Variable,
}

impl Coords<'_> {
    fn decode(&self, x: &[f64]) -> UnivariateEmosParams {
        let m = self.means.len();
        let mut intercept = x[0];
        let member_coeffs = (0..m)
            .map(|k| {
                let raw = if self.cfg.nonneg_coeffs { x[1 + k] * x[1 + k] } else { x[1 + k] };
                let b = raw / self.sds[k];
                intercept -= b * self.means[k];
                b
            })
            .collect();
        UnivariateEmosParams {
            variable: self.variable,
            intercept,
            member_coeffs,
            var_c: x[m + 1] * x[m + 1],
            var_d: x[m + 2] * x[m + 2],
        }
    }

    fn encode(&self, p: &UnivariateEmosParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.means.len() + 3);
        let shift: f64 = p.member_coeffs.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        x.push(p.intercept + shift);
        for (b, sd) in p.member_coeffs.iter().zip(&self.sds) {
            let raw = b * sd;
            x.push(if self.cfg.nonneg_coeffs { raw.max(0.0).sqrt() } else { raw });
        }
        x.push(p.var_c.sqrt());
        x.push(p.var_d.sqrt());
        x
    }
}

pub(crate) fn fit_univariate_features(
    features: &[CaseFeatures],
    variable: Variable,
    groups: &GroupSpec,
    cfg: &UnivariateFitConfig,
) -> Result<UnivariateFit> {
    let m = groups.n_groups();
    let n_free = univariate_free_params(m);
    if features.is_empty() {
        return Err(EmosError::InsufficientData("empty training set".into()));
    }
    if features.len() < n_free {
        return Err(EmosError::InsufficientData(format!(
            "{} training cases for {} free parameters",
            features.len(),
            n_free
        )));
    }
    let i = variable.index();
    let n = features.len() as f64;
    let design: Vec<Vec<f64>> = features.iter().map(|f| f.group_sums.iter().map(|s| s[i]).collect()).collect();
    let obs: Vec<f64> = features.iter().map(|f| f.observation.map_or(f64::NAN, |o| o[i])).collect();

    let (intercept, mut member_coeffs, regression_fallback) = match ols_with_intercept(&design, &obs) {
        Some((a, b)) => (a, b, false),
        None => {
            let bias = features.iter().zip(&obs).map(|(f, o)| o - f.ens_mean[i]).sum::<f64>() / n;
            (bias, vec![1.0 / groups.n_members() as f64; m], true)
        }
    };
    if cfg.nonneg_coeffs {
        member_coeffs.iter_mut().for_each(|b| *b = b.max(0.0));
    }
    let start = UnivariateEmosParams { variable, intercept, member_coeffs, var_c: 1.0, var_d: 1.0 };

    let means: Vec<f64> = (0..m).map(|k| design.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let sds: Vec<f64> = (0..m)
        .map(|k| {
            let v = design.iter().map(|r| (r[k] - means[k]).powi(2)).sum::<f64>() / n;
            if v > 0.0 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let coords = Coords { means, sds, cfg, variable };
    let initial_score = start.mean_crps(features);
    if !initial_score.is_finite() {
        return Err(EmosError::Optimizer("CRPS is not finite at the initial parameters".into()));
    }
    let res = minimize(|x| coords.decode(x).mean_crps(features), &coords.encode(&start), &cfg.optimizer)?;
    let params = coords.decode(&res.x_min);
    let score = params.mean_crps(features);
    let (params, score) = if score <= initial_score { (params, score) } else { (start, initial_score) };
    Ok(UnivariateFit { params, score, initial_score, converged: res.converged, evals: res.evals, regression_fallback })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cases_from(rows: Vec<(Vec<[f64; 2]>, [f64; 2])>) -> Vec<ForecastCase> {
        let d = NaiveDate::from_ymd_opt(2011, 1, 1).unwrap();
        rows.into_iter()
            .enumerate()
            .map(|(i, (m, o))| ForecastCase::new(d, format!("s{i}"), m, Some(o)).unwrap())
            .collect()
    }

    #[test]
    fn wind_law_is_truncated() {
        let g = GroupSpec::singletons(2).unwrap();
        let p = UnivariateEmosParams {
            variable: Variable::Wind,
            intercept: -5.0,
            member_coeffs: vec![0.5, 0.5],
            var_c: 1.0,
            var_d: 0.5,
        };
        let c = &cases_from(vec![(vec![[1.0, 280.0], [2.0, 281.0]], [0.5, 280.0])])[0];
        let law = p.predictive_law(c, &g).unwrap();
        assert_eq!(law.kind, LawKind::ZeroTruncatedNormal);
        assert_eq!(law.cdf(0.0), 0.0);
    }

    #[test]
    fn temperature_fit_near_generator_crps() {
        // normal EMOS generator: obs ~ N(2 + 0.9 f̄·… , 0.8 + 0.5 s²)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let groups = GroupSpec::from_sizes(&[4]).unwrap();
        let truth = UnivariateEmosParams {
            variable: Variable::Temp,
            intercept: 30.0,
            member_coeffs: vec![0.225],
            var_c: 0.8,
            var_d: 0.5,
        };
        let mut rows = Vec::new();
        for _ in 0..800 {
            let centre = 280.0 + 6.0 * rng.sample::<f64, _>(StandardNormal);
            let sd = 0.5 + 1.5 * rng.random::<f64>();
            let members: Vec<[f64; 2]> = (0..4)
                .map(|_| [3.0, centre + sd * rng.sample::<f64, _>(StandardNormal)])
                .collect();
            rows.push((members, [3.0, 0.0]));
        }
        let mut cases = cases_from(rows);
        for c in &mut cases {
            let f = CaseFeatures::new(c, &groups).unwrap();
            let law = truth.law_for_features(&f).unwrap();
            c.observation = Some([3.0, law.sample(&mut rng)]);
        }
        let feats = CaseFeatures::for_training(&cases, &groups).unwrap();
        let true_crps = truth.mean_crps(&feats);
        let fit = fit_univariate(&cases, Variable::Temp, &groups, &UnivariateFitConfig::default()).unwrap();
        assert!(fit.score <= fit.initial_score);
        assert!((fit.score - true_crps).abs() / true_crps < 0.02, "{} vs {}", fit.score, true_crps);
    }

    #[test]
    fn degenerate_ensemble_still_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let groups = GroupSpec::singletons(3).unwrap();
        let rows: Vec<_> = (0..60)
            .map(|i| {
                let w = 2.0 + (i % 7) as f64 * 0.5;
                (vec![[w, 280.0]; 3], [w + 0.5 * rng.random::<f64>(), 280.0 + rng.random::<f64>()])
            })
            .collect();
        let cases = cases_from(rows);
        for v in [Variable::Wind, Variable::Temp] {
            let fit = fit_univariate(&cases, v, &groups, &UnivariateFitConfig::default()).unwrap();
            assert!(fit.regression_fallback);
            let p = &fit.params;
            assert!(p.intercept.is_finite() && p.var_c > 0.0 && p.var_d.is_finite());
            assert!(p.member_coeffs.iter().all(|b| b.is_finite()));
        }
    }

    #[test]
    fn nonneg_switch_keeps_coefficients_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = GroupSpec::singletons(2).unwrap();
        let rows: Vec<_> = (0..200)
            .map(|_| {
                let a: f64 = 3.0 + 2.0 * rng.random::<f64>();
                let b: f64 = 3.0 + 2.0 * rng.random::<f64>();
                // observation anti-correlated with the second member
                (vec![[a, 280.0], [b, 281.0]], [(a - 0.5 * b + 3.0).max(0.0), 280.0])
            })
            .collect();
        let cases = cases_from(rows);
        let cfg = UnivariateFitConfig { nonneg_coeffs: true, ..Default::default() };
        let fit = fit_univariate(&cases, Variable::Wind, &groups, &cfg).unwrap();
        assert!(fit.params.member_coeffs.iter().all(|&b| b >= 0.0));
        let free = fit_univariate(&cases, Variable::Wind, &groups, &UnivariateFitConfig::default()).unwrap();
        assert!(free.params.member_coeffs[1] < 0.0);
    }
}
