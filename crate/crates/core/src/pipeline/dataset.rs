//! CSV ingestion and export of forecast cases.
//!
//! Layout: header `date,station,obs_wind,obs_temp,m1_wind,m1_temp,…,mM_wind,mM_temp`,
//! ISO-8601 dates, wind in m/s and temperature in K. An empty observation
//! field marks a case without observation: usable for prediction, excluded
//! from training and scoring.

use crate::emos::{ForecastCase, GroupSpec};
use crate::error::{EmosError, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub wind: String,
    pub temperature: String,
}

impl Default for DatasetMetadata {
    fn default() -> Self {
        Self { wind: "wind speed (m/s)".into(), temperature: "temperature (K)".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Sorted by date, then station.
    pub cases: Vec<ForecastCase>,
    pub groups: GroupSpec,
    pub metadata: DatasetMetadata,
}

impl Dataset {
    /// Validate, sort and check uniqueness of (date, station).
    pub fn new(mut cases: Vec<ForecastCase>, groups: GroupSpec, metadata: DatasetMetadata) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &cases {
            c.validate()?;
            if c.members.len() != groups.n_members() {
                return Err(EmosError::Format(format!(
                    "case {} / {} has {} members, the group layout has {}",
                    c.date,
                    c.station,
                    c.members.len(),
                    groups.n_members()
                )));
            }
            if !seen.insert((c.date, c.station.clone())) {
                return Err(EmosError::Format(format!("duplicate case {} / {}", c.date, c.station)));
            }
        }
        cases.sort_by(|a, b| (a.date, &a.station).cmp(&(b.date, &b.station)));
        Ok(Self { cases, groups, metadata })
    }

    pub fn n_members(&self) -> usize {
        self.groups.n_members()
    }

    /// Dates with at least one observed case.
    pub fn available_dates(&self) -> Vec<NaiveDate> {
        self.cases
            .iter()
            .filter(|c| c.observation.is_some())
            .map(|c| c.date)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn stations(&self) -> Vec<String> {
        self.cases.iter().map(|c| c.station.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn cases_on(&self, date: NaiveDate) -> &[ForecastCase] {
        let start = self.cases.partition_point(|c| c.date < date);
        let end = self.cases.partition_point(|c| c.date <= date);
        &self.cases[start..end]
    }
}

/// Options for reading a dataset.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    /// Member grouping; defaults to one group per member.
    pub groups: Option<GroupSpec>,
    pub metadata: DatasetMetadata,
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub struct Loaded {
    pub dataset: Dataset,
    pub rejected: Vec<RowDiagnostic>,
}

fn member_count(header: &csv::StringRecord) -> Result<usize> {
    let required = ["date", "station", "obs_wind", "obs_temp"];
    for (i, name) in required.iter().enumerate() {
        if header.get(i).map(str::trim) != Some(*name) {
            return Err(EmosError::Format(format!(
                "missing required column '{name}' at position {}",
                i + 1
            )));
        }
    }
    let rest = header.len() - required.len();
    if rest == 0 || rest % 2 != 0 {
        return Err(EmosError::Format("member columns must come in m<k>_wind, m<k>_temp pairs".into()));
    }
    let m = rest / 2;
    for k in 1..=m {
        for (off, var) in [(0, "wind"), (1, "temp")] {
            let expect = format!("m{k}_{var}");
            let got = header.get(4 + 2 * (k - 1) + off).map(str::trim).unwrap_or("");
            if got != expect {
                return Err(EmosError::Format(format!("expected column '{expect}', found '{got}'")));
            }
        }
    }
    Ok(m)
}

fn parse_num(field: &str, name: &str) -> std::result::Result<f64, String> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("{name}: cannot parse '{field}'"))
}

fn parse_row(rec: &csv::StringRecord, m: usize) -> std::result::Result<ForecastCase, String> {
    let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").map_err(|_| format!("malformed date '{}'", &rec[0]))?;
    let station = rec[1].trim().to_string();
    if station.is_empty() {
        return Err("empty station identifier".into());
    }
    let (ow, ot) = (rec[2].trim(), rec[3].trim());
    let observation = if ow.is_empty() || ot.is_empty() {
        None
    } else {
        Some([parse_num(ow, "obs_wind")?, parse_num(ot, "obs_temp")?])
    };
    let mut members = Vec::with_capacity(m);
    for k in 0..m {
        let w = parse_num(&rec[4 + 2 * k], &format!("m{}_wind", k + 1))?;
        let t = parse_num(&rec[5 + 2 * k], &format!("m{}_temp", k + 1))?;
        members.push([w, t]);
    }
    ForecastCase::new(date, station, members, observation).map_err(|e| e.to_string())
}

/// Read and validate a dataset. Rows violating the case invariants are
/// skipped and reported; structural problems (missing columns, empty file,
/// inconsistent member count) fail the whole load.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Loaded> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Err(EmosError::Format(format!("{}: empty file", path.display())));
    }
    let m = member_count(&header)?;
    let groups = match &schema.groups {
        Some(g) if g.n_members() != m => {
            return Err(EmosError::Config(format!(
                "file has {m} members but the group layout '{g}' has {}",
                g.n_members()
            )))
        }
        Some(g) => g.clone(),
        None => GroupSpec::singletons(m)?,
    };

    let mut cases = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(EmosError::Format(format!(
                "line {line}: {} fields, header has {} (inconsistent member count)",
                rec.len(),
                header.len()
            )));
        }
        match parse_row(&rec, m) {
            Ok(case) => {
                if seen.insert((case.date, case.station.clone())) {
                    cases.push(case);
                } else {
                    rejected.push(RowDiagnostic {
                        line,
                        message: format!("duplicate case {} / {}", case.date, case.station),
                    });
                }
            }
            Err(message) => rejected.push(RowDiagnostic { line, message }),
        }
    }
    for d in &rejected {
        log::warn!("{}: rejected {d}", path.display());
    }
    if cases.is_empty() {
        return Err(EmosError::Format(format!("{}: no valid data rows", path.display())));
    }
    let dataset = Dataset::new(cases, groups, schema.metadata.clone())?;
    Ok(Loaded { dataset, rejected })
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string(), "station".into(), "obs_wind".into(), "obs_temp".into()];
    for k in 1..=data.n_members() {
        header.push(format!("m{k}_wind"));
        header.push(format!("m{k}_temp"));
    }
    w.write_record(&header)?;
    for c in &data.cases {
        let mut row = vec![c.date.format("%Y-%m-%d").to_string(), c.station.clone()];
        match c.observation {
            Some(o) => row.extend([o[0].to_string(), o[1].to_string()]),
            None => row.extend([String::new(), String::new()]),
        }
        for f in &c.members {
            row.push(f[0].to_string());
            row.push(f[1].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
