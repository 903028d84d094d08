//! Joint calibration of wind speed and temperature ensemble forecasts.
//!
//! The central model is a bivariate normal predictive law whose wind
//! coordinate is truncated below at zero, with location affine in the
//! ensemble members and scale matrix `C + D S Dᵀ` driven by the ensemble
//! covariance `S`. Parameters are estimated regionally over rolling training
//! windows by minimizing the mean logarithmic score. Independent univariate
//! EMOS margins and a Gaussian-copula combination of them serve as
//! baselines, and every method is verified with multivariate scores.

pub mod copula;
pub mod distributions;
pub mod emos;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod pipeline;
pub mod verification;

pub use error::{EmosError, Result};
pub use linalg::{Mat2, Vec2};
