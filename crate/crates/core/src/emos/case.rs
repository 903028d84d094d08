use super::GroupSpec;
use crate::error::{EmosError, Result};
use crate::linalg::{sample_mean_cov, Mat2, Vec2};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One forecast case: the ensemble for a (date, station) pair and the
/// verifying observation, each a (wind speed m/s, temperature K) vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastCase {
    pub date: NaiveDate,
    pub station: String,
    pub members: Vec<Vec2>,
    pub observation: Option<Vec2>,
}

impl ForecastCase {
    pub fn new(
        date: NaiveDate,
        station: impl Into<String>,
        members: Vec<Vec2>,
        observation: Option<Vec2>,
    ) -> Result<Self> {
        let case = Self { date, station: station.into(), members, observation };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(EmosError::Domain("forecast case without ensemble members".into()));
        }
        if let Some(j) = self.members.iter().position(|f| !(f[0] >= 0.0) || !f[1].is_finite()) {
            return Err(EmosError::Domain(format!(
                "member {} has invalid values {:?} (wind must be nonnegative)",
                j + 1,
                self.members[j]
            )));
        }
        if let Some(o) = self.observation {
            if !(o[0] >= 0.0) || !o[1].is_finite() {
                return Err(EmosError::Domain(format!(
                    "observation {o:?} is invalid (wind must be nonnegative)"
                )));
            }
        }
        Ok(())
    }

    /// Ensemble mean and the unbiased ensemble covariance `S`.
    pub fn ensemble_stats(&self) -> Result<(Vec2, Mat2)> {
        ensemble_stats(&self.members)
    }
}

/// Ensemble mean `f̄` and covariance `S = (M−1)⁻¹ Σ (f_k − f̄)(f_k − f̄)ᵀ`.
pub fn ensemble_stats(members: &[Vec2]) -> Result<(Vec2, Mat2)> {
    sample_mean_cov(members).ok_or_else(|| {
        EmosError::InsufficientData(format!(
            "ensemble covariance needs at least 2 members, got {}",
            members.len()
        ))
    })
}

/// Per-case quantities the EMOS models depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseFeatures {
    /// Sum of member vectors within each exchangeable group.
    pub group_sums: Vec<Vec2>,
    pub ens_mean: Vec2,
    pub spread: Mat2,
    pub observation: Option<Vec2>,
}

impl CaseFeatures {
    pub fn new(case: &ForecastCase, groups: &GroupSpec) -> Result<Self> {
        if case.members.len() != groups.n_members() {
            return Err(EmosError::Domain(format!(
                "case {} / {} has {} members but the group layout expects {}",
                case.date,
                case.station,
                case.members.len(),
                groups.n_members()
            )));
        }
        // Accumulate in a canonical order (by group, then value) so that
        // permuting members within a group gives bit-identical features.
        let mut order: Vec<usize> = (0..case.members.len()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (case.members[i], case.members[j]);
            groups
                .group_of(i)
                .cmp(&groups.group_of(j))
                .then(a[0].total_cmp(&b[0]))
                .then(a[1].total_cmp(&b[1]))
        });
        let canonical: Vec<Vec2> = order.iter().map(|&j| case.members[j]).collect();
        let mut group_sums = vec![[0.0, 0.0]; groups.n_groups()];
        for &j in &order {
            let (f, s) = (case.members[j], &mut group_sums[groups.group_of(j)]);
            s[0] += f[0];
            s[1] += f[1];
        }
        let (ens_mean, spread) = ensemble_stats(&canonical)?;
        Ok(Self { group_sums, ens_mean, spread, observation: case.observation })
    }

    /// Features of every case that carries an observation.
    pub fn for_training(cases: &[ForecastCase], groups: &GroupSpec) -> Result<Vec<Self>> {
        cases
            .iter()
            .filter(|c| c.observation.is_some())
            .map(|c| Self::new(c, groups))
            .collect()
    }
}
