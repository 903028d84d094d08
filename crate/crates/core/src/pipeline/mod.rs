//! Data handling and experiment orchestration: CSV datasets, rolling
//! training windows, per-method calibration, synthetic data and timing.

pub mod calibrate;
pub mod dataset;
pub mod experiment;
pub mod synth;
pub mod window;

pub use calibrate::{
    estimate_copula, rolling_calibrate, CalibrationConfig, CalibrationRun, DailyFit, FittedModel,
    HistoryMargins, MethodKind, SkippedDate, TimingRecord,
};
pub use dataset::{load_dataset, write_dataset, Dataset, DatasetMetadata, Loaded, RowDiagnostic, Schema};
pub use experiment::{
    bench, format_histograms, format_report, format_timing_table, run_experiment, score_run, write_experiment,
    BenchRow, ExperimentConfig, ExperimentReport, MethodResult, TimingSummary,
};
pub use synth::{synthesize_dataset, Climate, SynthSpec, Truth};
pub use window::{training_cases, training_dates, WindowPlan, DEFAULT_TRAINING_DAYS};
