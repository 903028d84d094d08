//! Experiments: calibrate every method, score them on common cases, and
//! summarize estimation times.

use super::calibrate::{estimate_copula, rolling_calibrate, CalibrationConfig, CalibrationRun, MethodKind, TimingRecord};
use super::dataset::Dataset;
use super::window::WindowPlan;
use crate::error::{EmosError, Result};
use crate::optimizer::Method;
use crate::verification::rank::case_seed;
use crate::verification::{point_forecast_report, verify_case, CaseVerification, RankHistogram, ScoreReport, VerifyConfig};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub calibration: CalibrationConfig,
    pub verify: VerifyConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { calibration: CalibrationConfig::default(), verify: VerifyConfig::default(), seed: 20100101 }
    }
}

/// Median, mean and standard deviation of per-day estimation times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub days: usize,
    pub median: f64,
    pub mean: f64,
    pub std_dev: f64,
}

impl TimingSummary {
    pub fn from_records(records: &[TimingRecord]) -> Option<Self> {
        let mut s: Vec<f64> = records.iter().map(|r| r.seconds).collect();
        let n = s.len();
        if n == 0 {
            return None;
        }
        s.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        let mean = s.iter().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { days: n, median, mean, std_dev })
    }
}

/// Score `run` on every observed case of `dates`. The scoring seed of a case
/// depends only on `seed` and the case's position in the dataset, so runs
/// scored on the same dates share their random streams.
pub fn score_run(
    data: &Dataset,
    run: &CalibrationRun,
    dates: &[NaiveDate],
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<(Vec<CaseVerification>, ScoreReport, RankHistogram)> {
    let mut jobs = Vec::new();
    for &date in dates {
        let fit = run
            .fit_on(date)
            .ok_or_else(|| EmosError::Config(format!("{}: no fitted model for {date}", run.method)))?;
        let start = data.cases.partition_point(|c| c.date < date);
        for (offset, case) in data.cases_on(date).iter().enumerate() {
            if let Some(obs) = case.observation {
                jobs.push((start + offset, case, obs, &fit.model));
            }
        }
    }
    if jobs.is_empty() {
        return Err(EmosError::InsufficientData(format!("{}: no observed cases to verify", run.method)));
    }
    let bins = match run.method {
        MethodKind::Raw => data.n_members() + 1,
        _ => cfg.rank_samples + 1,
    };
    let cases: Vec<CaseVerification> = jobs
        .par_iter()
        .map(|(idx, case, obs, model)| {
            let source = model.forecast(case, &data.groups)?;
            verify_case(&source, *obs, cfg, case_seed(seed, *idx as u64))
        })
        .collect::<Result<_>>()?;
    let (report, hist) = point_forecast_report(&cases, bins)?;
    Ok((cases, report, hist))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: MethodKind,
    pub report: ScoreReport,
    pub histogram: RankHistogram,
    pub timing: Option<TimingSummary>,
    pub cases: Vec<CaseVerification>,
    pub run: CalibrationRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Verification dates on which every method has a fit.
    pub dates: Vec<NaiveDate>,
    pub results: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn result(&self, method: MethodKind) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Calibrate each method on the rolling windows of `plan` and score all of
/// them on the verification dates they have in common, with identical seeds.
/// The copula method estimates its correlation from `history`.
pub fn run_experiment(
    data: &Dataset,
    plan: &WindowPlan,
    methods: &[MethodKind],
    cfg: &ExperimentConfig,
    history: Option<&Dataset>,
) -> Result<ExperimentReport> {
    if methods.is_empty() {
        return Err(EmosError::Config("no methods requested".into()));
    }
    let copula = if methods.contains(&MethodKind::Copula) {
        let history = history.ok_or_else(|| {
            EmosError::Config("the copula method needs a history dataset for its correlation".into())
        })?;
        if history.n_members() != data.n_members() {
            return Err(EmosError::Config("history and verification data have different ensembles".into()));
        }
        Some(estimate_copula(history, plan.training_length_days, &cfg.calibration)?)
    } else {
        None
    };
    let runs: Vec<CalibrationRun> = methods
        .iter()
        .map(|&m| rolling_calibrate(data, plan, m, &cfg.calibration, copula))
        .collect::<Result<_>>()?;
    let mut common: BTreeSet<NaiveDate> = plan.verification_dates.iter().copied().collect();
    for run in &runs {
        let have: BTreeSet<NaiveDate> = run.fits.iter().map(|f| f.date).collect();
        common = common.intersection(&have).copied().collect();
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    if dates.is_empty() {
        return Err(EmosError::InsufficientData("no verification date has a fit for every method".into()));
    }
    let mut results = Vec::with_capacity(runs.len());
    for run in runs {
        let (cases, report, histogram) = score_run(data, &run, &dates, &cfg.verify, cfg.seed)?;
        let timing = TimingSummary::from_records(&run.timings);
        results.push(MethodResult { method: run.method, report, histogram, timing, cases, run });
    }
    Ok(ExperimentReport { dates, results })
}

/// One row of a timing benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: MethodKind,
    pub optimizer: Method,
    pub timing: TimingSummary,
    pub converged_days: usize,
    pub mean_score: f64,
}

impl BenchRow {
    pub fn label(&self) -> String {
        format!("{} ({})", self.method.label(), self.optimizer)
    }
}

/// Time the estimation of every (method, optimizer) pair, one day at a time.
pub fn bench(
    data: &Dataset,
    plan: &WindowPlan,
    methods: &[MethodKind],
    optimizers: &[Method],
    base: &CalibrationConfig,
    history: Option<&Dataset>,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &method in methods {
        for &optimizer in optimizers {
            let mut cfg = base.clone().with_optimizer(crate::optimizer::OptimizerConfig {
                method: optimizer,
                ..base.bivariate.optimizer
            });
            cfg.parallel = false;
            let copula = match (method, history) {
                (MethodKind::Copula, Some(h)) => Some(estimate_copula(h, plan.training_length_days, &cfg)?),
                (MethodKind::Copula, None) => {
                    return Err(EmosError::Config("benchmarking the copula method needs a history dataset".into()))
                }
                _ => None,
            };
            let run = rolling_calibrate(data, plan, method, &cfg, copula)?;
            let timing = TimingSummary::from_records(&run.timings).ok_or_else(|| {
                EmosError::InsufficientData(format!("{method}: no day could be estimated"))
            })?;
            let scores: Vec<f64> = run.fits.iter().filter_map(|f| f.score).collect();
            let mean_score = if scores.is_empty() { f64::NAN } else { scores.iter().sum::<f64>() / scores.len() as f64 };
            rows.push(BenchRow {
                method,
                optimizer,
                timing,
                converged_days: run.fits.iter().filter(|f| f.converged).count(),
                mean_score,
            });
        }
    }
    Ok(rows)
}

fn na(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v:.4}"))
}

/// Tab-separated report, one row per method.
pub fn format_report(results: &[MethodResult]) -> String {
    let mut out = String::from(
        "method\tcases\tES\tDelta\tDS\tEE_median\trho_median\trho_err_median\tEE_mean\trho_mean\trho_err_mean\n",
    );
    for r in results {
        let s = &r.report;
        let _ = writeln!(
            out,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{:.4}\t{}\t{}",
            r.method.label(),
            s.n_cases,
            s.mean_es,
            s.delta,
            s.mean_ds,
            s.ee_median,
            na(s.rho_median),
            na(s.rho_err_median),
            s.ee_mean,
            na(s.rho_mean),
            na(s.rho_err_mean)
        );
    }
    out
}

/// Rank-histogram counts in long format: `method, bin, count, relative_freq`.
pub fn format_histograms<'a>(hists: impl IntoIterator<Item = (&'a str, &'a RankHistogram)>) -> String {
    let mut out = String::from("method\tbin\tcount\trelative_freq\n");
    for (label, h) in hists {
        for (i, (c, f)) in h.counts.iter().zip(h.relative_freqs()).enumerate() {
            let _ = writeln!(out, "{label}\t{}\t{c}\t{f:.6}", i + 1);
        }
    }
    out
}

/// Timing table with methods as columns and median / mean / std.dev. rows,
/// in seconds.
pub fn format_timing_table(columns: &[(String, TimingSummary)]) -> String {
    let mut out = String::from("seconds");
    for (label, _) in columns {
        out.push('\t');
        out.push_str(label);
    }
    out.push('\n');
    let rows: [(&str, fn(&TimingSummary) -> f64); 3] =
        [("median", |t| t.median), ("mean", |t| t.mean), ("std.dev.", |t| t.std_dev)];
    for (name, get) in rows {
        out.push_str(name);
        for (_, t) in columns {
            let _ = write!(out, "\t{:.4}", get(t));
        }
        out.push('\n');
    }
    out
}

/// Write the report, rank histograms, per-day timings and the timing table
/// into `dir`.
pub fn write_experiment(dir: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.tsv"), format_report(&report.results))?;
    std::fs::write(
        dir.join("rank_histograms.tsv"),
        format_histograms(report.results.iter().map(|r| (r.method.label(), &r.histogram))),
    )?;
    let mut per_day = String::from("date\tmethod\tseconds\n");
    for r in &report.results {
        for t in &r.run.timings {
            let _ = writeln!(per_day, "{}\t{}\t{:.6}", t.date, t.method, t.seconds);
        }
    }
    std::fs::write(dir.join("timings.tsv"), per_day)?;
    let cols: Vec<(String, TimingSummary)> = report
        .results
        .iter()
        .filter(|r| r.method != MethodKind::Raw)
        .filter_map(|r| r.timing.map(|t| (r.method.label().to_string(), t)))
        .collect();
    std::fs::write(dir.join("timing_summary.tsv"), format_timing_table(&cols))?;
    Ok(())
}
