//! Probability laws: standard normal utilities, the truncated bivariate normal
//! predictive law and the univariate margins.

pub mod normal;
pub mod tbn;
pub mod univariate;

pub use normal::{
    inverse_mills, std_normal_cdf, std_normal_log_cdf, std_normal_pdf, std_normal_quantile,
};
pub use tbn::{MomentPair, TruncBivariateNormal};
pub use univariate::{crps_normal, crps_truncnormal, LawKind, UnivariateLaw};
