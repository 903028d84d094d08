//! Multivariate verification: energy score, multivariate rank histograms and
//! the reliability index, determinant sharpness, the spatial median and the
//! point-forecast summaries.

pub mod energy;
pub mod median;
pub mod rank;
pub mod report;
pub mod sharpness;

pub use energy::{energy_score_ensemble, energy_score_mc, energy_score_mc_all_pairs};
pub use median::{median_objective, spatial_median, SpatialMedian};
pub use rank::{multivariate_rank, rank_histogram_for_law, reliability_index, RankHistogram};
pub use report::{
    point_forecast_report, verify_case, CaseVerification, EsEstimator, ForecastSource, ScoreReport,
    VerifyConfig,
};
pub use sharpness::{determinant_sharpness, determinant_sharpness2};
