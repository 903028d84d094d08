//! Unconstrained minimization for score-based parameter estimation.
//!
//! Two methods are available: a Nelder–Mead simplex search (the default, and
//! the robust choice for small training sets) and a BFGS quasi-Newton method
//! driven by central finite-difference gradients. Both treat non-finite
//! objective values as `+∞`, so an objective can encode an infeasible region
//! by returning `f64::INFINITY`.

mod bfgs;
mod nelder_mead;

use crate::error::{EmosError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Simplex,
    QuasiNewton,
}

impl std::str::FromStr for Method {
    type Err = EmosError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simplex" | "nelder-mead" | "nm" => Ok(Method::Simplex),
            "quasi-newton" | "bfgs" | "qn" => Ok(Method::QuasiNewton),
            other => Err(EmosError::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Simplex => "simplex",
            Method::QuasiNewton => "quasi-newton",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Objective evaluation budget; `None` means `500 · dim`.
    pub max_evals: Option<usize>,
    /// Stop when the simplex (or the quasi-Newton step) is smaller than this
    /// in every coordinate.
    pub x_tol: f64,
    /// Relative objective tolerance: stop when the spread of simplex values
    /// (or the last decrease) is at most `f_tol · (|f_best| + f_tol)`.
    pub f_tol: f64,
    pub simplex_init_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Simplex,
            max_evals: None,
            x_tol: 1e-8,
            f_tol: 1e-8,
            simplex_init_step: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn budget(&self, dim: usize) -> usize {
        self.max_evals.unwrap_or(500 * dim.max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.max_evals == Some(0) {
            return Err(EmosError::Config("max_evals must be at least 1".into()));
        }
        if !(self.x_tol > 0.0 && self.f_tol > 0.0 && self.simplex_init_step > 0.0) {
            return Err(EmosError::Config("optimizer tolerances and step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x_min: Vec<f64>,
    pub f_min: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Counts evaluations and maps NaN to `+∞`.
pub(crate) struct Counted<F> {
    f: F,
    pub evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn new(f: F) -> Self {
        Self { f, evals: 0 }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimize `objective` starting from `x0`.
///
/// Fails only when the objective is not finite at `x0` or the configuration
/// is invalid; running out of budget yields `converged == false`.
pub fn minimize<F>(objective: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(EmosError::Optimizer("empty parameter vector".into()));
    }
    let mut counted = Counted::new(objective);
    let f0 = counted.eval(x0);
    if !f0.is_finite() {
        return Err(EmosError::Optimizer(format!("objective is not finite at the start point ({f0})")));
    }
    let res = match cfg.method {
        Method::Simplex => nelder_mead::run(&mut counted, x0, f0, cfg),
        Method::QuasiNewton => bfgs::run(&mut counted, x0, f0, cfg),
    };
    debug_assert!(res.f_min <= f0);
    Ok(res)
}
