//! EMOS predictive models: the bivariate truncated-normal model with
//! exchangeable member groups, and independent univariate margins.

pub mod bivariate;
pub mod case;
pub mod groups;
pub mod regression;
pub mod univariate;

pub use bivariate::{
    bivariate_free_params, fit_bivariate, mean_log_score, BivariateEmosParams, BivariateFit,
    BivariateFitConfig, ScaleStart,
};
pub use case::{ensemble_stats, CaseFeatures, ForecastCase};
pub use groups::GroupSpec;
pub use univariate::{
    fit_univariate, univariate_free_params, UnivariateEmosParams, UnivariateFit,
    UnivariateFitConfig, Variable,
};
