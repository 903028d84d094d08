//! Rolling training windows over available days.

use super::dataset::Dataset;
use crate::emos::ForecastCase;
use crate::error::{EmosError, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRAINING_DAYS: usize = 40;

/// Verification dates and the training length. Windows count available
/// days (dates with at least one observed case) pooled over all stations,
/// so excluded days are skipped rather than shortening the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub training_length_days: usize,
    pub verification_dates: Vec<NaiveDate>,
}

impl WindowPlan {
    /// Every available date preceded by at least `training_length_days`
    /// available dates.
    pub fn full(data: &Dataset, training_length_days: usize) -> Result<Self> {
        if training_length_days == 0 {
            return Err(EmosError::Config("training length must be at least one day".into()));
        }
        let avail = data.available_dates();
        let verification_dates = avail.iter().skip(training_length_days).copied().collect();
        Ok(Self { training_length_days, verification_dates })
    }

    /// Restrict verification to dates in `[from, to]`.
    pub fn between(mut self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        self.verification_dates
            .retain(|d| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t));
        self
    }

    /// Each verification date must be available and have at least one
    /// available training date before it.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let avail = data.available_dates();
        for d in &self.verification_dates {
            if avail.binary_search(d).is_err() {
                return Err(EmosError::Config(format!("verification date {d} has no observed cases")));
            }
            if avail.first().is_none_or(|first| first >= d) {
                return Err(EmosError::Config(format!("verification date {d} has no prior training data")));
            }
        }
        if self.verification_dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EmosError::Config("verification dates must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// The most recent `len` available dates strictly before `date`.
pub fn training_dates(available: &[NaiveDate], date: NaiveDate, len: usize) -> &[NaiveDate] {
    let end = available.partition_point(|d| *d < date);
    &available[end.saturating_sub(len)..end]
}

/// All cases on the training dates of `date`, observed or not.
pub fn training_cases(data: &Dataset, available: &[NaiveDate], date: NaiveDate, len: usize) -> Vec<ForecastCase> {
    training_dates(available, date, len)
        .iter()
        .flat_map(|d| data.cases_on(*d).iter().cloned())
        .collect()
}
