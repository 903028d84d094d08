use bivemos::emos::GroupSpec;
use bivemos::optimizer::{Method, OptimizerConfig};
use bivemos::pipeline::{
    bench, estimate_copula, format_histograms, format_report, format_timing_table, load_dataset, rolling_calibrate,
    run_experiment, score_run, synthesize_dataset, write_dataset, write_experiment, CalibrationConfig,
    CalibrationRun, Dataset, ExperimentConfig, HistoryMargins, MethodKind, MethodResult, Schema, SynthSpec,
    TimingSummary, WindowPlan, DEFAULT_TRAINING_DAYS,
};
use bivemos::verification::{EsEstimator, VerifyConfig};
use bivemos::{EmosError, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bivemos", version, about = "Bivariate EMOS calibration of wind speed and temperature ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one method on rolling training windows and save the daily models.
    Calibrate(CalibrateArgs),
    /// Score saved models and write the report and rank histograms.
    Verify(VerifyArgs),
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Time parameter estimation per day for each method and optimizer.
    Bench(BenchArgs),
    /// Calibrate and verify several methods in one go.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Member grouping, e.g. `1,10` or `1x8`; default one group per member.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TRAINING_DAYS)]
    train_days: usize,
    /// First verification date (ISO).
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last verification date (ISO).
    #[arg(long)]
    to: Option<NaiveDate>,
    /// Use only the first N verification dates.
    #[arg(long)]
    max_days: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginsArg {
    Rolling,
    Pooled,
}

#[derive(Args, Clone)]
struct FitArgs {
    /// Optimizer: simplex or quasi-newton.
    #[arg(long, default_value = "simplex")]
    optimizer: String,
    /// Objective evaluation budget (default 500 per parameter).
    #[arg(long)]
    max_evals: Option<usize>,
    /// Start the scale parameters from the previous day's fit.
    #[arg(long)]
    previous_day_start: bool,
    /// Constrain univariate member coefficients to be nonnegative.
    #[arg(long)]
    nonneg_coeffs: bool,
    /// Fit dates one after another.
    #[arg(long)]
    serial: bool,
    /// History dataset for the copula correlation.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rolling")]
    history_margins: MarginsArg,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: String,
    #[command(flatten)]
    fit: FitArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ScoreArgs {
    #[arg(long, default_value_t = 10_000)]
    es_samples: usize,
    #[arg(long, default_value_t = 100)]
    rank_samples: usize,
    /// Use all sample pairs in the energy-score spread term.
    #[arg(long)]
    es_all_pairs: bool,
    #[arg(long, default_value_t = 20100101)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory written by `calibrate`.
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    score: ScoreArgs,
    /// Report file; rank histograms go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Preset (`aladin`, `uwme`) or JSON spec file.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stations: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    dispersion: Option<f64>,
    #[arg(long)]
    missing_day_rate: Option<f64>,
    /// Print the resolved spec as JSON.
    #[arg(long)]
    print_spec: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "bivariate-emos")]
    methods: String,
    /// Comma list of optimizers.
    #[arg(long, default_value = "simplex,quasi-newton")]
    optimizer: String,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    history: Option<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "bivariate-emos,independent-emos,copula,raw")]
    methods: String,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long)]
    out: PathBuf,
}

fn load(path: &Path, groups: Option<&str>) -> Result<Dataset> {
    let groups = groups.map(GroupSpec::parse).transpose()?;
    let loaded = load_dataset(path, &Schema { groups, ..Default::default() })?;
    if !loaded.rejected.is_empty() {
        eprintln!("{}: {} rows rejected", path.display(), loaded.rejected.len());
        for d in loaded.rejected.iter().take(20) {
            eprintln!("  {d}");
        }
    }
    Ok(loaded.dataset)
}

fn plan(data: &Dataset, a: &DataArgs) -> Result<WindowPlan> {
    let mut plan = WindowPlan::full(data, a.train_days)?.between(a.from, a.to);
    if let Some(n) = a.max_days {
        plan.verification_dates.truncate(n);
    }
    if plan.verification_dates.is_empty() {
        return Err(EmosError::Config(format!(
            "no verification date has {} prior available days in the requested range",
            a.train_days
        )));
    }
    Ok(plan)
}

fn calibration_config(f: &FitArgs) -> Result<CalibrationConfig> {
    let optimizer = OptimizerConfig { max_evals: f.max_evals, ..OptimizerConfig::with_method(f.optimizer.parse()?) };
    let mut cfg = CalibrationConfig::default().with_optimizer(optimizer);
    cfg.previous_day_start = f.previous_day_start;
    cfg.parallel = !f.serial;
    cfg.univariate.nonneg_coeffs = f.nonneg_coeffs;
    cfg.history_margins = match f.history_margins {
        MarginsArg::Rolling => HistoryMargins::Rolling,
        MarginsArg::Pooled => HistoryMargins::Pooled,
    };
    Ok(cfg)
}

fn verify_config(s: &ScoreArgs) -> Result<VerifyConfig> {
    if s.es_samples < 2 || s.rank_samples < 1 {
        return Err(EmosError::Config("need at least 2 energy-score samples and 1 rank sample".into()));
    }
    Ok(VerifyConfig {
        es_samples: s.es_samples,
        rank_samples: s.rank_samples,
        median_samples: None,
        es_estimator: if s.es_all_pairs { EsEstimator::AllPairs } else { EsEstimator::Consecutive },
    })
}

fn load_history(path: Option<&Path>, groups: Option<&str>) -> Result<Option<Dataset>> {
    path.map(|p| load(p, groups)).transpose()
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let method: MethodKind = a.method.parse()?;
    let data = load(&a.data.data, a.data.groups.as_deref())?;
    let plan = plan(&data, &a.data)?;
    let cfg = calibration_config(&a.fit)?;
    let copula = match (method, a.fit.history.as_deref()) {
        (MethodKind::Copula, None) => {
            return Err(EmosError::Config("--method copula needs --history for the correlation".into()))
        }
        (MethodKind::Copula, Some(h)) => {
            let history = load(h, a.data.groups.as_deref())?;
            let model = estimate_copula(&history, plan.training_length_days, &cfg)?;
            eprintln!("copula correlation {:.4}", model.gamma);
            Some(model)
        }
        _ => None,
    };
    let run = rolling_calibrate(&data, &plan, method, &cfg, copula)?;
    std::fs::create_dir_all(&a.out)?;
    run.save(a.out.join(format!("{method}.json")))?;
    let mut per_day = String::from("date\tmethod\tseconds\n");
    for t in &run.timings {
        let _ = writeln!(per_day, "{}\t{}\t{:.6}", t.date, t.method, t.seconds);
    }
    std::fs::write(a.out.join(format!("{method}_timings.tsv")), per_day)?;
    for s in &run.skipped {
        eprintln!("skipped {}: {}", s.date, s.reason);
    }
    println!(
        "{method}: {} dates fitted ({} converged), {} skipped",
        run.fits.len(),
        run.fits.iter().filter(|f| f.converged).count(),
        run.skipped.len()
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let mut runs = Vec::new();
    for entry in std::fs::read_dir(&a.models)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            runs.push(CalibrationRun::load(&path)?);
        }
    }
    if runs.is_empty() {
        return Err(EmosError::Config(format!("no model files in {}", a.models.display())));
    }
    runs.sort_by_key(|r| r.method);
    let groups = runs[0].groups.clone();
    if runs.iter().any(|r| r.groups != groups) {
        return Err(EmosError::Config("model files use different member groupings".into()));
    }
    let data = load_dataset(&a.data, &Schema { groups: Some(groups), ..Default::default() })?.dataset;
    let mut dates: BTreeSet<NaiveDate> = runs[0].fits.iter().map(|f| f.date).collect();
    for r in &runs[1..] {
        let have: BTreeSet<NaiveDate> = r.fits.iter().map(|f| f.date).collect();
        dates = dates.intersection(&have).copied().collect();
    }
    let available: BTreeSet<NaiveDate> = data.available_dates().into_iter().collect();
    let dates: Vec<NaiveDate> = dates.intersection(&available).copied().collect();
    if dates.is_empty() {
        return Err(EmosError::Config("the models and the data share no verification date".into()));
    }
    let cfg = verify_config(&a.score)?;
    let mut results = Vec::new();
    for run in runs {
        let (cases, report, histogram) = score_run(&data, &run, &dates, &cfg, a.score.seed)?;
        let timing = TimingSummary::from_records(&run.timings);
        results.push(MethodResult { method: run.method, report, histogram, timing, cases, run });
    }
    std::fs::write(&a.out, format_report(&results))?;
    let stem = a.out.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
    let ranks = a.out.with_file_name(format!("{stem}_rank_histograms.tsv"));
    std::fs::write(&ranks, format_histograms(results.iter().map(|r| (r.method.label(), &r.histogram))))?;
    print!("{}", format_report(&results));
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = SynthSpec::resolve(&a.spec)?;
    if let Some(s) = a.stations {
        spec.stations = s;
    }
    if let Some(d) = a.days {
        spec.days = d;
    }
    if let Some(d) = a.dispersion {
        spec.dispersion = d;
    }
    if let Some(r) = a.missing_day_rate {
        spec.missing_day_rate = r;
    }
    if a.print_spec {
        println!("{}", serde_json::to_string_pretty(&spec)?);
    }
    let data = synthesize_dataset(&spec, a.seed)?;
    write_dataset(&a.out, &data)?;
    eprintln!(
        "{} cases, {} stations, {} members (groups {})",
        data.cases.len(),
        data.stations().len(),
        data.n_members(),
        data.groups
    );
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let methods = MethodKind::parse_list(&a.methods)?;
    let optimizers: Vec<Method> =
        a.optimizer.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_>>()?;
    if optimizers.is_empty() {
        return Err(EmosError::Config("empty optimizer list".into()));
    }
    let data = load(&a.data.data, a.data.groups.as_deref())?;
    let history = load_history(a.history.as_deref(), a.data.groups.as_deref())?;
    let plan = plan(&data, &a.data)?;
    let base = CalibrationConfig::default()
        .with_optimizer(OptimizerConfig { max_evals: a.max_evals, ..OptimizerConfig::default() });
    let rows = bench(&data, &plan, &methods, &optimizers, &base, history.as_ref())?;
    let cols: Vec<(String, TimingSummary)> = rows.iter().map(|r| (r.label(), r.timing)).collect();
    let mut table = format_timing_table(&cols);
    table.push_str("converged");
    for r in &rows {
        let _ = write!(table, "\t{}/{}", r.converged_days, r.timing.days);
    }
    table.push_str("\nmean score");
    for r in &rows {
        let _ = write!(table, "\t{:.4}", r.mean_score);
    }
    table.push('\n');
    print!("{table}");
    if let Some(out) = a.out {
        std::fs::write(out, table)?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let methods = MethodKind::parse_list(&a.methods)?;
    let data = load(&a.data.data, a.data.groups.as_deref())?;
    let history = load_history(a.fit.history.as_deref(), a.data.groups.as_deref())?;
    let plan = plan(&data, &a.data)?;
    let cfg = ExperimentConfig {
        calibration: calibration_config(&a.fit)?,
        verify: verify_config(&a.score)?,
        seed: a.score.seed,
    };
    let report = run_experiment(&data, &plan, &methods, &cfg, history.as_ref())?;
    write_experiment(&a.out, &report)?;
    print!("{}", format_report(&report.results));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => calibrate(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => run_bench(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, EmosError::Config(_)) { 2 } else { 1 })
        }
    }
}
