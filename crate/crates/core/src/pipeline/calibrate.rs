//! Rolling-window estimation for every method.

use super::dataset::Dataset;
use super::window::{training_cases, WindowPlan};
use crate::copula::{estimate_correlation, CopulaModel, MarginPair};
use crate::emos::bivariate::fit_bivariate_features;
use crate::emos::univariate::fit_univariate_features;
use crate::emos::{
    BivariateEmosParams, BivariateFitConfig, CaseFeatures, ForecastCase, GroupSpec, ScaleStart,
    UnivariateEmosParams, UnivariateFitConfig, Variable,
};
use crate::error::{EmosError, Result};
use crate::optimizer::OptimizerConfig;
use crate::verification::ForecastSource;
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    BivariateEmos,
    IndependentEmos,
    Copula,
    Raw,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] =
        [MethodKind::BivariateEmos, MethodKind::IndependentEmos, MethodKind::Copula, MethodKind::Raw];

    /// Row label for reports.
    pub fn label(self) -> &'static str {
        match self {
            MethodKind::BivariateEmos => "Bivariate EMOS",
            MethodKind::IndependentEmos => "Independent EMOS",
            MethodKind::Copula => "Gaussian copula",
            MethodKind::Raw => "Raw ensemble",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<MethodKind>> {
        let mut out: Vec<MethodKind> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(EmosError::Config("empty method list".into()));
        }
        Ok(out)
    }
}

impl FromStr for MethodKind {
    type Err = EmosError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bivariate-emos" | "bivariate" => Ok(MethodKind::BivariateEmos),
            "independent-emos" | "independent" => Ok(MethodKind::IndependentEmos),
            "copula" | "gaussian-copula" => Ok(MethodKind::Copula),
            "raw" | "raw-ensemble" => Ok(MethodKind::Raw),
            other => Err(EmosError::Config(format!(
                "unknown method '{other}' (expected bivariate-emos, independent-emos, copula or raw)"
            ))),
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::BivariateEmos => "bivariate-emos",
            MethodKind::IndependentEmos => "independent-emos",
            MethodKind::Copula => "copula",
            MethodKind::Raw => "raw",
        })
    }
}

/// Parameters estimated for one verification date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    Bivariate { params: BivariateEmosParams },
    Independent { wind: UnivariateEmosParams, temp: UnivariateEmosParams },
    Copula { wind: UnivariateEmosParams, temp: UnivariateEmosParams, model: CopulaModel },
    Raw,
}

impl FittedModel {
    /// The predictive distribution this model issues for `case`.
    pub fn forecast(&self, case: &ForecastCase, groups: &GroupSpec) -> Result<ForecastSource> {
        let margins = |w: &UnivariateEmosParams, t: &UnivariateEmosParams| -> Result<MarginPair> {
            Ok([w.predictive_law(case, groups)?, t.predictive_law(case, groups)?])
        };
        Ok(match self {
            FittedModel::Bivariate { params } => ForecastSource::Law(params.predictive_law(case, groups)?),
            FittedModel::Independent { wind, temp } => {
                ForecastSource::Copula { margins: margins(wind, temp)?, model: CopulaModel { gamma: 0.0 } }
            }
            FittedModel::Copula { wind, temp, model } => {
                ForecastSource::Copula { margins: margins(wind, temp)?, model: *model }
            }
            FittedModel::Raw => ForecastSource::Ensemble(case.members.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyFit {
    pub date: NaiveDate,
    pub model: FittedModel,
    pub training_cases: usize,
    /// Final training score: mean log score (bivariate) or the sum of the
    /// two mean CRPS values (margins). Absent for the raw ensemble.
    pub score: Option<f64>,
    pub converged: bool,
    pub evals: usize,
}

/// Wall-clock time of one day's parameter estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub date: NaiveDate,
    pub method: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDate {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub method: MethodKind,
    pub groups: GroupSpec,
    pub training_length_days: usize,
    pub fits: Vec<DailyFit>,
    pub timings: Vec<TimingRecord>,
    pub skipped: Vec<SkippedDate>,
}

impl CalibrationRun {
    pub fn fit_on(&self, date: NaiveDate) -> Option<&DailyFit> {
        self.fits.binary_search_by_key(&date, |f| f.date).ok().map(|i| &self.fits[i])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Where the historical margins for copula-correlation estimation come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryMargins {
    /// Rolling-window fits, as in the main protocol.
    #[default]
    Rolling,
    /// A single fit on the whole history period.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub bivariate: BivariateFitConfig,
    pub univariate: UnivariateFitConfig,
    /// Start each day's bivariate scale parameters from the previous day's
    /// estimates. Forces sequential fitting.
    pub previous_day_start: bool,
    pub parallel: bool,
    pub history_margins: HistoryMargins,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            bivariate: BivariateFitConfig::default(),
            univariate: UnivariateFitConfig::default(),
            previous_day_start: false,
            parallel: true,
            history_margins: HistoryMargins::Rolling,
        }
    }
}

impl CalibrationConfig {
    pub fn with_optimizer(mut self, optimizer: OptimizerConfig) -> Self {
        self.bivariate.optimizer = optimizer;
        self.univariate.optimizer = optimizer;
        self
    }
}

struct Estimate {
    model: FittedModel,
    score: Option<f64>,
    converged: bool,
    evals: usize,
}

fn fit_margins(features: &[CaseFeatures], groups: &GroupSpec, cfg: &UnivariateFitConfig) -> Result<(Estimate, UnivariateEmosParams, UnivariateEmosParams)> {
    let w = fit_univariate_features(features, Variable::Wind, groups, cfg)?;
    let t = fit_univariate_features(features, Variable::Temp, groups, cfg)?;
    let est = Estimate {
        model: FittedModel::Independent { wind: w.params.clone(), temp: t.params.clone() },
        score: Some(w.score + t.score),
        converged: w.converged && t.converged,
        evals: w.evals + t.evals,
    };
    Ok((est, w.params, t.params))
}

fn estimate(
    method: MethodKind,
    features: &[CaseFeatures],
    groups: &GroupSpec,
    cfg: &CalibrationConfig,
    copula: Option<CopulaModel>,
    previous: Option<&BivariateEmosParams>,
) -> Result<Estimate> {
    match method {
        MethodKind::BivariateEmos => {
            let mut bcfg = cfg.bivariate.clone();
            if let Some(p) = previous {
                bcfg.scale_start = ScaleStart::Given { c_factor: p.c_factor, d: p.d };
            }
            let fit = fit_bivariate_features(features, groups, &bcfg)?;
            Ok(Estimate {
                model: FittedModel::Bivariate { params: fit.params },
                score: Some(fit.score),
                converged: fit.converged, evals: fit.evals })
        }
        MethodKind::IndependentEmos => Ok(fit_margins(features, groups, &cfg.univariate)?.0),
        MethodKind::Copula => {
            let model = copula.ok_or_else(|| EmosError::Config("copula method needs a correlation model".into()))?;
            let (est, wind, temp) = fit_margins(features, groups, &cfg.univariate)?;
            Ok(Estimate { model: FittedModel::Copula { wind, temp, model }, ..est })
        }
        MethodKind::Raw => Ok(Estimate { model: FittedModel::Raw, score: None, converged: true, evals: 0 }),
    }
}

type DayOutcome = std::result::Result<(DailyFit, TimingRecord), SkippedDate>;

fn calibrate_day(
    data: &Dataset,
    available: &[NaiveDate],
    plan: &WindowPlan,
    date: NaiveDate,
    method: MethodKind,
    cfg: &CalibrationConfig,
    copula: Option<CopulaModel>,
    previous: Option<&BivariateEmosParams>,
) -> Result<DayOutcome> {
    let cases = training_cases(data, available, date, plan.training_length_days);
    let features = CaseFeatures::for_training(&cases, &data.groups)?;
    let clock = Instant::now();
    let result = estimate(method, &features, &data.groups, cfg, copula, previous);
    let seconds = clock.elapsed().as_secs_f64();
    match result {
        Ok(est) => Ok(Ok((
            DailyFit { date, model: est.model, training_cases: features.len(),
                score: est.score,
                converged: est.converged, evals: est.evals },
            TimingRecord { date, method: method.to_string(), seconds },
        ))),
        Err(e @ (EmosError::InsufficientData(_) | EmosError::Optimizer(_))) => {
            log::warn!("{method} {date}: skipped ({e})");
            Ok(Err(SkippedDate { date, reason: e.to_string() }))
        }
        Err(e) => Err(e),
    }
}

/// Fit `method` for every verification date of `plan` on the preceding
/// training window, pooling all stations. Dates whose window cannot support
/// a fit are skipped with a diagnostic.
pub fn rolling_calibrate(
    data: &Dataset,
    plan: &WindowPlan,
    method: MethodKind,
    cfg: &CalibrationConfig,
    copula: Option<CopulaModel>,
) -> Result<CalibrationRun> {
    plan.validate(data)?;
    if method == MethodKind::Copula && copula.is_none() {
        return Err(EmosError::Config(
            "the copula method needs a correlation estimated from a separate history dataset".into(),
        ));
    }
    let available = data.available_dates();
    let sequential = cfg.previous_day_start && method == MethodKind::BivariateEmos;
    let outcomes: Vec<DayOutcome> = if sequential {
        let mut out = Vec::with_capacity(plan.verification_dates.len());
        let mut previous: Option<BivariateEmosParams> = None;
        for &date in &plan.verification_dates {
            let o = calibrate_day(data, &available, plan, date, method, cfg, copula, previous.as_ref())?;
            if let Ok((DailyFit { model: FittedModel::Bivariate { params }, .. }, _)) = &o {
                previous = Some(params.clone());
            }
            out.push(o);
        }
        out
    } else if cfg.parallel {
        plan.verification_dates
            .par_iter()
            .map(|&d| calibrate_day(data, &available, plan, d, method, cfg, copula, None))
            .collect::<Result<_>>()?
    } else {
        plan.verification_dates
            .iter()
            .map(|&d| calibrate_day(data, &available, plan, d, method, cfg, copula, None))
            .collect::<Result<_>>()?
    };

    let mut run = CalibrationRun {
        method,
        groups: data.groups.clone(),
        training_length_days: plan.training_length_days,
        fits: Vec::new(),
        timings: Vec::new(),
        skipped: Vec::new(),
    };
    for o in outcomes {
        match o {
            Ok((fit, timing)) => {
                run.fits.push(fit);
                run.timings.push(timing);
            }
            Err(s) => run.skipped.push(s),
        }
    }
    Ok(run)
}

/// Estimate the copula correlation from a history dataset: margins are
/// fitted on the history (rolling windows or one pooled fit) and the latent
/// correlation of the observed history cases is computed under them.
pub fn estimate_copula(history: &Dataset, training_length_days: usize, cfg: &CalibrationConfig) -> Result<CopulaModel> {
    let groups = &history.groups;
    let pairs = |fit: &FittedModel, cases: &[ForecastCase]| -> Result<Vec<(MarginPair, [f64; 2])>> {
        let (w, t) = match fit {
            FittedModel::Independent { wind, temp } => (wind, temp),
            _ => unreachable!("margins come from independent fits"),
        };
        cases
            .iter()
            .filter_map(|c| c.observation.map(|o| (c, o)))
            .map(|(c, o)| Ok(([w.predictive_law(c, groups)?, t.predictive_law(c, groups)?], o)))
            .collect()
    };
    let collected = match cfg.history_margins {
        HistoryMargins::Pooled => {
            let features = CaseFeatures::for_training(&history.cases, groups)?;
            let (est, _, _) = fit_margins(&features, groups, &cfg.univariate)?;
            pairs(&est.model, &history.cases)?
        }
        HistoryMargins::Rolling => {
            let plan = WindowPlan::full(history, training_length_days)?;
            if plan.verification_dates.is_empty() {
                return Err(EmosError::InsufficientData(format!(
                    "history has no date with {training_length_days} prior available days"
                )));
            }
            let run = rolling_calibrate(history, &plan, MethodKind::IndependentEmos, cfg, None)?;
            let per_day: Vec<Vec<_>> = run
                .fits
                .par_iter()
                .map(|f| pairs(&f.model, history.cases_on(f.date)))
                .collect::<Result<_>>()?;
            per_day.into_iter().flatten().collect()
        }
    };
    estimate_correlation(&collected)
}
