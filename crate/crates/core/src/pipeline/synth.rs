//! Synthetic ensemble/observation generator.
//!
//! Each (day, station) pair gets a latent signal: a station climatology plus
//! a seasonal temperature cycle plus a correlated anomaly. Members scatter
//! around the signal with group biases and a per-case spread level; the
//! observation is drawn from the truth law.

use super::dataset::{Dataset, DatasetMetadata};
use crate::distributions::TruncBivariateNormal;
use crate::emos::{BivariateEmosParams, CaseFeatures, ForecastCase, GroupSpec};
use crate::error::{EmosError, Result};
use crate::linalg::{Mat2, Vec2};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// How observations relate to the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truth {
    /// Observations follow the bivariate EMOS law of these parameters given
    /// the generated members.
    Emos(BivariateEmosParams),
    /// Members and observation are drawn from one truncated normal centred
    /// on the signal with scale `scale · g²` (`g` the case spread level);
    /// members are then contracted towards the centre by `dispersion`.
    Exchangeable { scale: Mat2 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Climate {
    pub wind_mean: f64,
    pub wind_sd: f64,
    pub temp_mean: f64,
    pub temp_seasonal_amplitude: f64,
    pub temp_sd: f64,
    pub station_wind_sd: f64,
    pub station_temp_sd: f64,
    /// Correlation of the wind and temperature anomalies.
    pub anomaly_corr: f64,
}

impl Default for Climate {
    fn default() -> Self {
        Self {
            wind_mean: 4.0,
            wind_sd: 2.0,
            temp_mean: 280.0,
            temp_seasonal_amplitude: 8.0,
            temp_sd: 3.0,
            station_wind_sd: 1.0,
            station_temp_sd: 2.0,
            anomaly_corr: -0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub stations: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub group_sizes: Vec<usize>,
    pub truth: Truth,
    /// Multiplier on member deviations; below 1 gives an underdispersed ensemble.
    pub dispersion: f64,
    /// Probability that a whole day is absent.
    pub missing_day_rate: f64,
    /// Probability that a single observation is absent.
    pub missing_obs_rate: f64,
    pub climate: Climate,
    /// Member deviation standard deviations (wind, temperature) at `dispersion = 1`.
    pub member_sd: Vec2,
    pub member_corr: f64,
    /// Log-sd of the per-case spread level `g`.
    pub spread_variability: f64,
    /// Additive member bias per group (EMOS truth only).
    pub group_bias: Vec<Vec2>,
}

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2008, 1, 1).expect("valid date")
}

impl SynthSpec {
    /// Control plus ten exchangeable perturbed members over ten stations.
    pub fn aladin() -> Self {
        let truth = BivariateEmosParams {
            a: [0.5, 14.5],
            b: vec![Mat2::new(0.2, 0.0, 0.0, 0.3), Mat2::new(0.06, 0.0, -0.01, 0.065)],
            c_factor: Mat2::new(0.9, 0.0, 0.8, 0.8),
            d: Mat2::new(0.6, 0.0, 0.1, 0.7),
        };
        Self {
            stations: 10,
            days: 365,
            start_date: start(),
            group_sizes: vec![1, 10],
            truth: Truth::Emos(truth),
            dispersion: 1.0,
            missing_day_rate: 0.0,
            missing_obs_rate: 0.0,
            climate: Climate::default(),
            member_sd: [1.0, 1.5],
            member_corr: 0.2,
            spread_variability: 0.3,
            group_bias: vec![[0.2, -0.5], [0.4, -0.3]],
        }
    }

    /// Eight distinguishable members over ninety stations.
    pub fn uwme() -> Self {
        let b = (0..8)
            .map(|k| Mat2::new(0.08 + 0.01 * (k % 3) as f64, 0.0, 0.0, 0.115 + 0.002 * k as f64))
            .collect();
        let truth = BivariateEmosParams {
            a: [0.4, 6.5],
            b,
            c_factor: Mat2::new(0.9, 0.0, 0.4, 1.2),
            d: Mat2::new(0.5, 0.0, 0.1, 0.6),
        };
        Self {
            stations: 90,
            days: 365,
            start_date: start(),
            group_sizes: vec![1; 8],
            truth: Truth::Emos(truth),
            dispersion: 1.0,
            missing_day_rate: 0.0,
            missing_obs_rate: 0.0,
            climate: Climate::default(),
            member_sd: [1.0, 1.5],
            member_corr: 0.2,
            spread_variability: 0.3,
            group_bias: (0..8).map(|k| [0.3 * (k % 3) as f64 - 0.3, 0.4 * (k % 4) as f64 - 0.6]).collect(),
        }
    }

    /// Members and observations exchangeable draws of one law.
    pub fn exchangeable(stations: usize, days: usize, members: usize, dispersion: f64) -> Self {
        Self {
            stations,
            days,
            start_date: start(),
            group_sizes: vec![members],
            truth: Truth::Exchangeable { scale: Mat2::symmetric(1.5, 0.6, 2.5) },
            dispersion,
            missing_day_rate: 0.0,
            missing_obs_rate: 0.0,
            climate: Climate::default(),
            member_sd: [1.0, 1.0],
            member_corr: 0.0,
            spread_variability: 0.3,
            group_bias: vec![[0.0, 0.0]],
        }
    }

    /// A named preset (`aladin`, `uwme`) or a JSON spec file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "aladin" => Ok(Self::aladin()),
            "uwme" => Ok(Self::uwme()),
            path => {
                let text = std::fs::read_to_string(Path::new(path))?;
                let spec: Self = serde_json::from_str(&text)?;
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    pub fn groups(&self) -> Result<GroupSpec> {
        GroupSpec::from_sizes(&self.group_sizes)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EmosError::Config(msg));
        let groups = self.groups()?;
        if self.stations == 0 || self.days == 0 {
            return bad("station and day counts must be positive".into());
        }
        if !(self.dispersion > 0.0 && self.dispersion.is_finite()) {
            return bad(format!("dispersion must be positive, got {}", self.dispersion));
        }
        for (name, r) in [("missing_day_rate", self.missing_day_rate), ("missing_obs_rate", self.missing_obs_rate)] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name} must lie in [0, 1), got {r}"));
            }
        }
        if !(self.member_sd.iter().all(|s| *s > 0.0 && s.is_finite()) && self.member_corr.abs() < 1.0) {
            return bad("member deviation sds must be positive and |member_corr| < 1".into());
        }
        if !(self.spread_variability >= 0.0) || self.climate.anomaly_corr.abs() >= 1.0 {
            return bad("spread variability must be nonnegative and |anomaly_corr| < 1".into());
        }
        if self.group_bias.len() != groups.n_groups() {
            return bad(format!(
                "{} group biases for {} groups",
                self.group_bias.len(),
                groups.n_groups()
            ));
        }
        match &self.truth {
            Truth::Emos(p) if p.n_groups() != groups.n_groups() => {
                bad(format!("truth has {} coefficient matrices for {} groups", p.n_groups(), groups.n_groups()))
            }
            Truth::Exchangeable { scale } if !scale.is_positive_definite() => {
                bad("exchangeable scale matrix must be positive definite".into())
            }
            _ => Ok(()),
        }
    }
}

fn correlated_normal<R: Rng + ?Sized>(rng: &mut R, corr: f64) -> Vec2 {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    [z1, corr * z1 + (1.0 - corr * corr).sqrt() * z2]
}

/// Generate a dataset; deterministic in `seed`.
pub fn synthesize_dataset(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let groups = spec.groups()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cl = &spec.climate;
    let offsets: Vec<Vec2> = (0..spec.stations)
        .map(|_| {
            let z = correlated_normal(&mut rng, 0.0);
            [cl.station_wind_sd * z[0], cl.station_temp_sd * z[1]]
        })
        .collect();
    let width = spec.stations.to_string().len();
    let mut cases = Vec::with_capacity(spec.stations * spec.days);
    for t in 0..spec.days {
        if rng.random::<f64>() < spec.missing_day_rate {
            continue;
        }
        let date = spec.start_date + chrono::Duration::days(t as i64);
        let season = cl.temp_seasonal_amplitude * (2.0 * PI * (t as f64 - 100.0) / 365.0).sin();
        for (s, off) in offsets.iter().enumerate() {
            let z = correlated_normal(&mut rng, cl.anomaly_corr);
            let signal = [
                (cl.wind_mean + off[0] + cl.wind_sd * z[0]).max(0.1),
                cl.temp_mean + off[1] + season + cl.temp_sd * z[1],
            ];
            let g = (spec.spread_variability * rng.sample::<f64, _>(StandardNormal)).exp();
            let (members, obs) = match &spec.truth {
                Truth::Emos(params) => {
                    let members: Vec<Vec2> = (0..groups.n_members())
                        .map(|j| {
                            let bias = spec.group_bias[groups.group_of(j)];
                            let e = correlated_normal(&mut rng, spec.member_corr);
                            let k = spec.dispersion * g;
                            [
                                (signal[0] + bias[0] + k * spec.member_sd[0] * e[0]).max(0.0),
                                signal[1] + bias[1] + k * spec.member_sd[1] * e[1],
                            ]
                        })
                        .collect();
                    let probe = ForecastCase { date, station: String::new(), members, observation: None };
                    let law = params.law_for_features(&CaseFeatures::new(&probe, &groups)?)?;
                    (probe.members, law.sample_one(&mut rng))
                }
                Truth::Exchangeable { scale } => {
                    let law = TruncBivariateNormal::from_location_scale(signal, &scale.scale(g * g))?;
                    let members = (0..groups.n_members())
                        .map(|_| {
                            let x = law.sample_one(&mut rng);
                            let f = [
                                signal[0] + spec.dispersion * (x[0] - signal[0]),
                                signal[1] + spec.dispersion * (x[1] - signal[1]),
                            ];
                            [f[0].max(0.0), f[1]]
                        })
                        .collect();
                    (members, law.sample_one(&mut rng))
                }
            };
            let observation = (rng.random::<f64>() >= spec.missing_obs_rate).then_some(obs);
            let station = format!("S{:0width$}", s + 1);
            cases.push(ForecastCase::new(date, station, members, observation)?);
        }
    }
    if cases.is_empty() {
        return Err(EmosError::Config("generator produced no cases (missing-day rate too high)".into()));
    }
    Dataset::new(cases, groups, DatasetMetadata::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emos::bivariate_free_params;

    #[test]
    fn presets_are_valid() {
        for spec in [SynthSpec::aladin(), SynthSpec::uwme(), SynthSpec::exchangeable(3, 5, 4, 1.0)] {
            spec.validate().unwrap();
        }
        assert_eq!(bivariate_free_params(SynthSpec::aladin().groups().unwrap().n_groups()), 18);
        assert_eq!(bivariate_free_params(SynthSpec::uwme().groups().unwrap().n_groups()), 42);
    }

    #[test]
    fn deterministic_and_well_formed() {
        let mut spec = SynthSpec::aladin();
        spec.days = 12;
        spec.missing_day_rate = 0.25;
        spec.missing_obs_rate = 0.1;
        let a = synthesize_dataset(&spec, 7).unwrap();
        let b = synthesize_dataset(&spec, 7).unwrap();
        let c = synthesize_dataset(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.cases.len() % 10, 0);
        assert!(a.cases.len() < 120);
        assert!(a.cases.iter().all(|c| c.members.len() == 11 && c.validate().is_ok()));
        assert!(a.cases.iter().any(|c| c.observation.is_none()));
    }

    #[test]
    fn dispersion_scales_member_spread() {
        let spread = |d: f64| {
            let data = synthesize_dataset(&SynthSpec::exchangeable(20, 20, 8, d), 3).unwrap();
            data.cases.iter().map(|c| c.ensemble_stats().unwrap().1 .0[1][1]).sum::<f64>() / data.cases.len() as f64
        };
        let ratio = spread(0.3) / spread(1.0);
        assert!((ratio - 0.09).abs() < 0.01, "variance ratio {ratio}");
    }

    #[test]
    fn invalid_specs() {
        let mut s = SynthSpec::aladin();
        s.dispersion = 0.0;
        assert!(synthesize_dataset(&s, 1).is_err());
        let mut s = SynthSpec::aladin();
        s.group_sizes = vec![11];
        assert!(s.validate().is_err());
        let mut s = SynthSpec::aladin();
        s.missing_day_rate = 1.0;
        assert!(s.validate().is_err());
        assert!(SynthSpec::resolve("/nonexistent/spec.json").is_err());
    }
}
