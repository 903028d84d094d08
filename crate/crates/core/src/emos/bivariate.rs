//! Bivariate truncated-normal EMOS: predictive law
//! `N₂⁰(A + Σ_k B_k Σ_ℓ f_{k,ℓ}, C + D S Dᵀ)` with `C = 𝒞𝒞ᵀ`.

use super::case::{CaseFeatures, ForecastCase};
use super::regression::ols_with_intercept;
use super::GroupSpec;
use crate::distributions::TruncBivariateNormal;
use crate::error::{EmosError, Result};
use crate::linalg::{Mat2, Vec2};
use crate::optimizer::{minimize, OptimizerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateEmosParams {
    /// Location intercept `A`.
    pub a: Vec2,
    /// One coefficient matrix `B_k` per exchangeable group.
    pub b: Vec<Mat2>,
    /// Factor `𝒞` of the constant scale term `C = 𝒞𝒞ᵀ`. All four entries are
    /// free, which gives the `4m + 10` parameter count.
    pub c_factor: Mat2,
    /// Spread coefficient matrix `D`.
    pub d: Mat2,
}

/// Number of free parameters of the bivariate model with `m` groups.
pub fn bivariate_free_params(m: usize) -> usize {
    2 + 4 * m + 4 + 4
}

impl BivariateEmosParams {
    pub fn n_groups(&self) -> usize {
        self.b.len()
    }

    pub fn n_free(&self) -> usize {
        bivariate_free_params(self.n_groups())
    }

    pub fn c(&self) -> Mat2 {
        self.c_factor.gram()
    }

    /// Flatten as `[A, B_1, …, B_m, 𝒞, D]`, matrices row-major.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_free());
        v.extend_from_slice(&self.a);
        for bk in &self.b {
            v.extend_from_slice(&bk.to_array());
        }
        v.extend_from_slice(&self.c_factor.to_array());
        v.extend_from_slice(&self.d.to_array());
        v
    }

    pub fn from_vector(v: &[f64], m: usize) -> Result<Self> {
        if v.len() != bivariate_free_params(m) {
            return Err(EmosError::Domain(format!(
                "parameter vector has length {} but {} groups need {}",
                v.len(),
                m,
                bivariate_free_params(m)
            )));
        }
        let b = (0..m).map(|k| Mat2::from_slice(&v[2 + 4 * k..6 + 4 * k])).collect();
        let off = 2 + 4 * m;
        Ok(Self {
            a: [v[0], v[1]],
            b,
            c_factor: Mat2::from_slice(&v[off..off + 4]),
            d: Mat2::from_slice(&v[off + 4..off + 8]),
        })
    }

    pub fn location(&self, features: &CaseFeatures) -> Vec2 {
        let mut loc = self.a;
        for (bk, s) in self.b.iter().zip(&features.group_sums) {
            let t = bk.mul_vec(*s);
            loc[0] += t[0];
            loc[1] += t[1];
        }
        loc
    }

    pub fn scale(&self, features: &CaseFeatures) -> Mat2 {
        (self.c() + self.d.sandwich(&features.spread)).symmetrized()
    }

    pub fn law_for_features(&self, features: &CaseFeatures) -> Result<TruncBivariateNormal> {
        TruncBivariateNormal::from_location_scale(self.location(features), &self.scale(features))
    }

    /// Predictive law for one case; fails when the scale matrix is not
    /// positive definite.
    pub fn predictive_law(&self, case: &ForecastCase, groups: &GroupSpec) -> Result<TruncBivariateNormal> {
        self.check_groups(groups)?;
        self.law_for_features(&CaseFeatures::new(case, groups)?)
    }

    fn check_groups(&self, groups: &GroupSpec) -> Result<()> {
        if groups.n_groups() != self.n_groups() {
            return Err(EmosError::Domain(format!(
                "parameters have {} coefficient matrices but the layout has {} groups",
                self.n_groups(),
                groups.n_groups()
            )));
        }
        Ok(())
    }
}

/// Negative log predictive density of one case; `+∞` for invalid laws.
fn case_log_score(params: &BivariateEmosParams, features: &CaseFeatures) -> f64 {
    let Some(obs) = features.observation else {
        return f64::NAN;
    };
    match params.law_for_features(features) {
        Ok(law) => -law.log_pdf(obs),
        Err(_) => f64::INFINITY,
    }
}

pub(crate) fn mean_log_score_features(params: &BivariateEmosParams, features: &[CaseFeatures]) -> f64 {
    let total: f64 = features.iter().map(|f| case_log_score(params, f)).sum();
    total / features.len() as f64
}

/// Mean over cases of `−log g(obs | predictive law)`; `+∞` if any case has an
/// invalid law or zero density.
pub fn mean_log_score(
    params: &BivariateEmosParams,
    training: &[ForecastCase],
    groups: &GroupSpec,
) -> Result<f64> {
    params.check_groups(groups)?;
    if training.is_empty() {
        return Err(EmosError::InsufficientData("empty training set".into()));
    }
    if training.iter().any(|c| c.observation.is_none()) {
        return Err(EmosError::InsufficientData("training case without observation".into()));
    }
    let features = CaseFeatures::for_training(training, groups)?;
    Ok(mean_log_score_features(params, &features))
}

/// How the scale parameters `𝒞` and `D` are initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum ScaleStart {
    /// `𝒞 = I`, `D = 0.1 I`.
    #[default]
    Fixed,
    /// Start from previously estimated values (e.g. the previous day's fit).
    Given { c_factor: Mat2, d: Mat2 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BivariateFitConfig {
    pub optimizer: OptimizerConfig,
    pub scale_start: ScaleStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateFit {
    pub params: BivariateEmosParams,
    pub score: f64,
    pub initial_score: f64,
    pub converged: bool,
    pub evals: usize,
    /// The regression design was rank deficient and the fallback start was used.
    pub regression_fallback: bool,
}

/// Regression start for `A` and `B_k`: wind and temperature observations are
/// each regressed on the `2m` group-sum coordinates. `None` when the design
/// is rank deficient.
pub fn regression_start(features: &[CaseFeatures], m: usize) -> Option<(Vec2, Vec<Mat2>)> {
    let design: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.group_sums.iter().flat_map(|s| [s[0], s[1]]).collect())
        .collect();
    let obs: Vec<Vec2> = features.iter().filter_map(|f| f.observation).collect();
    let wind = ols_with_intercept(&design, &obs.iter().map(|o| o[0]).collect::<Vec<_>>())?;
    let temp = ols_with_intercept(&design, &obs.iter().map(|o| o[1]).collect::<Vec<_>>())?;
    let b = (0..m)
        .map(|k| Mat2::new(wind.1[2 * k], wind.1[2 * k + 1], temp.1[2 * k], temp.1[2 * k + 1]))
        .collect();
    Some(([wind.0, temp.0], b))
}

/// Fallback location start: `B_k = I / M` (so the location tracks the
/// ensemble mean) and `A` = mean observation minus mean ensemble mean.
fn fallback_start(features: &[CaseFeatures], groups: &GroupSpec) -> (Vec2, Vec<Mat2>) {
    let n = features.len() as f64;
    let mut a = [0.0, 0.0];
    for f in features {
        if let Some(o) = f.observation {
            a[0] += (o[0] - f.ens_mean[0]) / n;
            a[1] += (o[1] - f.ens_mean[1]) / n;
        }
    }
    let w = 1.0 / groups.n_members() as f64;
    (a, vec![Mat2::scaled_identity(w); groups.n_groups()])
}

/// Affine change of variables that standardizes the group-sum predictors, so
/// the optimizer sees location coefficients of comparable magnitude.
struct Standardizer {
    means: Vec<Vec2>,
    sds: Vec<Vec2>,
}

impl Standardizer {
    fn new(features: &[CaseFeatures], m: usize) -> Self {
        let n = features.len() as f64;
        let mut means = vec![[0.0, 0.0]; m];
        for f in features {
            for (mk, s) in means.iter_mut().zip(&f.group_sums) {
                mk[0] += s[0] / n;
                mk[1] += s[1] / n;
            }
        }
        let mut sds = vec![[0.0, 0.0]; m];
        for f in features {
            for ((sk, mk), s) in sds.iter_mut().zip(&means).zip(&f.group_sums) {
                sk[0] += (s[0] - mk[0]).powi(2) / n;
                sk[1] += (s[1] - mk[1]).powi(2) / n;
            }
        }
        for sk in &mut sds {
            for v in sk.iter_mut() {
                *v = if *v > 0.0 { v.sqrt() } else { 1.0 };
            }
        }
        Self { means, sds }
    }

    /// Natural → standardized: `B'_k = B_k diag(sd_k)`, `A' = A + Σ B_k mean_k`.
    fn forward(&self, p: &BivariateEmosParams) -> BivariateEmosParams {
        let mut a = p.a;
        let b = p
            .b
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(bk, (mk, sk))| {
                let t = bk.mul_vec(*mk);
                a[0] += t[0];
                a[1] += t[1];
                *bk * Mat2::diag(sk[0], sk[1])
            })
            .collect();
        BivariateEmosParams { a, b, c_factor: p.c_factor, d: p.d }
    }

    fn inverse(&self, p: &BivariateEmosParams) -> BivariateEmosParams {
        let mut a = p.a;
        let b = p
            .b
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(bk, (mk, sk))| {
                let nat = *bk * Mat2::diag(1.0 / sk[0], 1.0 / sk[1]);
                let t = nat.mul_vec(*mk);
                a[0] -= t[0];
                a[1] -= t[1];
                nat
            })
            .collect();
        BivariateEmosParams { a, b, c_factor: p.c_factor, d: p.d }
    }
}

/// Initial parameters: regression location coefficients plus the configured
/// scale start.
pub fn initial_params(
    features: &[CaseFeatures],
    groups: &GroupSpec,
    scale_start: &ScaleStart,
) -> (BivariateEmosParams, bool) {
    let ((a, b), fallback) = match regression_start(features, groups.n_groups()) {
        Some(start) => (start, false),
        None => (fallback_start(features, groups), true),
    };
    let (c_factor, d) = match scale_start {
        ScaleStart::Fixed => (Mat2::IDENTITY, Mat2::scaled_identity(0.1)),
        ScaleStart::Given { c_factor, d } => (*c_factor, *d),
    };
    (BivariateEmosParams { a, b, c_factor, d }, fallback)
}

/// Estimate the bivariate model by minimizing the mean log score over the
/// training cases (all stations pooled).
pub fn fit_bivariate(
    training: &[ForecastCase],
    groups: &GroupSpec,
    cfg: &BivariateFitConfig,
) -> Result<BivariateFit> {
    let features = CaseFeatures::for_training(training, groups)?;
    fit_bivariate_features(&features, groups, cfg)
}

pub(crate) fn fit_bivariate_features(
    features: &[CaseFeatures],
    groups: &GroupSpec,
    cfg: &BivariateFitConfig,
) -> Result<BivariateFit> {
    let m = groups.n_groups();
    let n_free = bivariate_free_params(m);
    if features.len() < n_free {
        return Err(EmosError::InsufficientData(format!(
            "{} training cases for {} free parameters",
            features.len(),
            n_free
        )));
    }
    let (start, regression_fallback) = initial_params(features, groups, &cfg.scale_start);
    let mut initial_score = mean_log_score_features(&start, features);
    let mut start = start;
    if !initial_score.is_finite() && matches!(cfg.scale_start, ScaleStart::Given { .. }) {
        let (fixed, _) = initial_params(features, groups, &ScaleStart::Fixed);
        start = fixed;
        initial_score = mean_log_score_features(&start, features);
    }
    if !initial_score.is_finite() {
        return Err(EmosError::Optimizer(format!(
            "log score is not finite at the initial parameters ({initial_score})"
        )));
    }
    let std = Standardizer::new(features, m);
    let x0 = std.forward(&start).to_vector();
    let objective = |x: &[f64]| match BivariateEmosParams::from_vector(x, m) {
        Ok(p) => mean_log_score_features(&std.inverse(&p), features),
        Err(_) => f64::INFINITY,
    };
    let res = minimize(objective, &x0, &cfg.optimizer)?;
    let params = std.inverse(&BivariateEmosParams::from_vector(&res.x_min, m)?);
    let score = mean_log_score_features(&params, features);
    let (params, score) = if score <= initial_score { (params, score) } else { (start, initial_score) };
    Ok(BivariateFit {
        params,
        score,
        initial_score,
        converged: res.converged,
        evals: res.evals,
        regression_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn case(members: Vec<Vec2>, obs: Option<Vec2>) -> ForecastCase {
        ForecastCase::new(NaiveDate::from_ymd_opt(2010, 5, 1).unwrap(), "x", members, obs).unwrap()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(bivariate_free_params(1), 14);
        assert_eq!(bivariate_free_params(2), 18);
        assert_eq!(bivariate_free_params(8), 42);
    }

    #[test]
    fn vector_roundtrip() {
        let v: Vec<f64> = (0..18).map(|i| i as f64 * 0.5 - 3.0).collect();
        let p = BivariateEmosParams::from_vector(&v, 2).unwrap();
        assert_eq!(p.to_vector(), v);
        assert!(BivariateEmosParams::from_vector(&v, 3).is_err());
    }

    #[test]
    fn identity_wiring() {
        let groups = GroupSpec::from_sizes(&[2]).unwrap();
        let p = BivariateEmosParams {
            a: [0.0, 0.0],
            b: vec![Mat2::scaled_identity(0.5)],
            c_factor: Mat2::IDENTITY,
            d: Mat2::ZERO,
        };
        let law = p.predictive_law(&case(vec![[1.0, 280.0], [3.0, 282.0]], None), &groups).unwrap();
        assert_eq!(law.location(), [2.0, 281.0]);
        assert_eq!(law.scale_matrix(), Mat2::IDENTITY);
    }

    #[test]
    fn grouped_layout_uses_two_matrices() {
        let groups = GroupSpec::parse("1,10").unwrap();
        let bc = Mat2::new(0.3, 0.01, 0.0, 0.25);
        let bp = Mat2::new(0.07, 0.0, 0.02, 0.075);
        let p = BivariateEmosParams { a: [0.2, 1.0], b: vec![bc, bp], c_factor: Mat2::IDENTITY, d: Mat2::ZERO };
        let members: Vec<Vec2> = (0..11).map(|j| [1.0 + j as f64 * 0.1, 275.0 + j as f64 * 0.2]).collect();
        let law = p.predictive_law(&case(members.clone(), None), &groups).unwrap();
        let psum = members[1..].iter().fold([0.0, 0.0], |a, f| [a[0] + f[0], a[1] + f[1]]);
        let c = bc.mul_vec(members[0]);
        let q = bp.mul_vec(psum);
        let expect = [0.2 + c[0] + q[0], 1.0 + c[1] + q[1]];
        assert!((law.mu_w - expect[0]).abs() < 1e-12 && (law.mu_t - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn spread_decoupled_when_d_zero() {
        let groups = GroupSpec::singletons(3).unwrap();
        let c_factor = Mat2::new(1.0, 0.0, 0.5, 2.0);
        let p = BivariateEmosParams {
            a: [1.0, 0.0],
            b: vec![Mat2::scaled_identity(1.0 / 3.0); 3],
            c_factor,
            d: Mat2::ZERO,
        };
        for spread in [0.0, 1.0, 5.0] {
            let c = case(vec![[2.0, 280.0], [2.0 + spread, 281.0], [2.0, 280.0 - spread]], None);
            let law = p.predictive_law(&c, &groups).unwrap();
            assert_eq!(law.scale_matrix(), c_factor.gram().symmetrized());
        }
    }

    #[test]
    fn invalid_scale_is_flagged() {
        let groups = GroupSpec::singletons(2).unwrap();
        let p = BivariateEmosParams {
            a: [0.0, 0.0],
            b: vec![Mat2::scaled_identity(0.5); 2],
            c_factor: Mat2::new(1.0, 0.0, 1.0, 0.0),
            d: Mat2::ZERO,
        };
        let c = case(vec![[1.0, 280.0], [3.0, 282.0]], Some([2.0, 281.0]));
        assert!(p.predictive_law(&c, &groups).is_err());
        assert_eq!(mean_log_score(&p, &[c], &groups).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mode_score() {
        let groups = GroupSpec::from_sizes(&[2]).unwrap();
        let p = BivariateEmosParams {
            a: [20.0, 0.0],
            b: vec![Mat2::scaled_identity(0.5)],
            c_factor: Mat2::diag(1.5, 0.5),
            d: Mat2::ZERO,
        };
        let c = case(vec![[1.0, 280.0], [3.0, 282.0]], Some([22.0, 281.0]));
        let s = mean_log_score(&p, &[c], &groups).unwrap();
        let det: f64 = 2.25 * 0.25;
        let expect = -(1.0 / (2.0 * std::f64::consts::PI * det.sqrt())).ln();
        assert!((s - expect).abs() < 1e-10);
    }

    #[test]
    fn score_improves_toward_observation() {
        let groups = GroupSpec::from_sizes(&[2]).unwrap();
        let c = case(vec![[5.0, 280.0], [5.0, 280.0]], Some([8.0, 284.0]));
        let mut prev = f64::INFINITY;
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let p = BivariateEmosParams {
                a: [3.0 * t, 4.0 * t],
                b: vec![Mat2::scaled_identity(0.5)],
                c_factor: Mat2::IDENTITY,
                d: Mat2::ZERO,
            };
            let s = mean_log_score(&p, std::slice::from_ref(&c), &groups).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn empty_training_rejected() {
        let groups = GroupSpec::singletons(2).unwrap();
        let p = BivariateEmosParams::from_vector(&[0.0; 26], 4);
        assert!(p.is_ok());
        let p = BivariateEmosParams::from_vector(&vec![0.1; 18], 2).unwrap();
        assert!(mean_log_score(&p, &[], &groups).is_err());
    }

    #[test]
    fn minimum_training_size_guard() {
        let groups = GroupSpec::singletons(2).unwrap();
        let cases: Vec<ForecastCase> = (0..10)
            .map(|i| case(vec![[1.0 + i as f64, 280.0], [2.0, 281.0 + i as f64]], Some([1.5, 280.5])))
            .collect();
        match fit_bivariate(&cases, &groups, &BivariateFitConfig::default()) {
            Err(EmosError::InsufficientData(msg)) => assert!(msg.contains("10") && msg.contains("18")),
            other => panic!("expected size guard, got {other:?}"),
        }
    }
}
