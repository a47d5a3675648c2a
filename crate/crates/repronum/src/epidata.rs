//! Ingestion of cumulative case-count CSVs and conversion to daily
//! incidence.
//!
//! CSV schema: `date,region,confirmed,recovered,deaths` with ISO-8601
//! dates. Population and tests-per-million come from a separate region
//! metadata file: `region,population,tests_per_million`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("region {0:?} not present in file")]
    MissingRegion(String),
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate or out-of-order date {0} for region")]
    NonMonotonicDates(NaiveDate),
    #[error("series too short: need at least {need} days, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("bad window [{begin}, {end}] for series of length {len}")]
    BadWindow { begin: usize, end: usize, len: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Cumulative confirmed/recovered/death counts for one region, one row
/// per day with no gaps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CumulativeSeries {
    pub region: String,
    pub dates: Vec<NaiveDate>,
    pub confirmed: Vec<u64>,
    pub recovered: Vec<u64>,
    pub deaths: Vec<u64>,
    pub population: u64,
    pub tests_per_million: Option<f64>,
}

/// Daily new-case counts for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceSeries {
    pub region: String,
    pub start_date: NaiveDate,
    pub counts: Vec<u64>,
}

/// Per-region population and testing metadata.
#[derive(Debug, Clone, Default)]
pub struct RegionMeta {
    entries: HashMap<String, (u64, Option<f64>)>,
}

impl RegionMeta {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut entries = HashMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let region = field(&rec, 0, line)?.to_string();
            let population: u64 = parse_num(field(&rec, 1, line)?, line)?;
            let tpm = match rec.get(2).map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(s.parse::<f64>().map_err(|e| DataError::MalformedRow {
                    line,
                    reason: format!("tests_per_million {s:?}: {e}"),
                })?),
            };
            entries.insert(region, (population, tpm));
        }
        Ok(RegionMeta { entries })
    }

    pub fn get(&self, region: &str) -> Option<(u64, Option<f64>)> {
        self.entries.get(region).copied()
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, line: usize) -> Result<&'a str, DataError> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| DataError::MalformedRow {
            line,
            reason: format!("missing column {idx}"),
        })
}

fn parse_num(s: &str, line: usize) -> Result<u64, DataError> {
    s.parse().map_err(|e| DataError::MalformedRow {
        line,
        reason: format!("non-numeric count {s:?}: {e}"),
    })
}

/// Load the cumulative series for one region. Interior date gaps are
/// filled by carrying the previous cumulative values forward.
pub fn load_cumulative_csv(
    path: &Path,
    region: &str,
    meta: &RegionMeta,
) -> Result<CumulativeSeries, DataError> {
    let (population, tests_per_million) = meta
        .get(region)
        .ok_or_else(|| DataError::MissingRegion(region.to_string()))?;

    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows: Vec<(NaiveDate, u64, u64, u64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if field(&rec, 1, line)? != region {
            continue;
        }
        let date = NaiveDate::parse_from_str(field(&rec, 0, line)?, "%Y-%m-%d").map_err(|e| {
            DataError::MalformedRow {
                line,
                reason: format!("unparseable date: {e}"),
            }
        })?;
        let confirmed = parse_num(field(&rec, 2, line)?, line)?;
        let recovered = parse_num(field(&rec, 3, line)?, line)?;
        let deaths = parse_num(field(&rec, 4, line)?, line)?;
        rows.push((date, confirmed, recovered, deaths));
    }
    if rows.is_empty() {
        return Err(DataError::MissingRegion(region.to_string()));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(DataError::NonMonotonicDates(w[1].0));
        }
    }

    // gap-fill: missing interior dates inherit the previous row
    let mut dates = Vec::new();
    let mut confirmed = Vec::new();
    let mut recovered = Vec::new();
    let mut deaths = Vec::new();
    let mut cursor = rows[0].0;
    let mut idx = 0;
    while idx < rows.len() {
        if rows[idx].0 == cursor {
            dates.push(cursor);
            confirmed.push(rows[idx].1);
            recovered.push(rows[idx].2);
            deaths.push(rows[idx].3);
            idx += 1;
        } else {
            dates.push(cursor);
            confirmed.push(*confirmed.last().unwrap());
            recovered.push(*recovered.last().unwrap());
            deaths.push(*deaths.last().unwrap());
        }
        cursor = cursor.succ_opt().expect("date overflow");
    }

    Ok(CumulativeSeries {
        region: region.to_string(),
        dates,
        confirmed,
        recovered,
        deaths,
        population,
        tests_per_million,
    })
}

/// A day whose cumulative count decreased; the daily difference was
/// clamped to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampWarning {
    pub date: NaiveDate,
    pub drop: u64,
}

/// First-difference the confirmed counts into daily incidence. Day 0
/// equals the first cumulative value; negative differences (reporting
/// corrections) clamp to zero and are returned as warnings.
pub fn to_daily_incidence(
    c: &CumulativeSeries,
) -> Result<(IncidenceSeries, Vec<ClampWarning>), DataError> {
    if c.confirmed.len() < 2 {
        return Err(DataError::TooShort {
            need: 2,
            got: c.confirmed.len(),
        });
    }
    let mut counts = Vec::with_capacity(c.confirmed.len());
    let mut warnings = Vec::new();
    counts.push(c.confirmed[0]);
    for t in 1..c.confirmed.len() {
        if c.confirmed[t] >= c.confirmed[t - 1] {
            counts.push(c.confirmed[t] - c.confirmed[t - 1]);
        } else {
            counts.push(0);
            warnings.push(ClampWarning {
                date: c.dates[t],
                drop: c.confirmed[t - 1] - c.confirmed[t],
            });
        }
    }
    Ok((
        IncidenceSeries {
            region: c.region.clone(),
            start_date: c.dates[0],
            counts,
        },
        warnings,
    ))
}

/// Inclusive sub-series `[begin, end]` with the start date shifted.
pub fn window(s: &IncidenceSeries, begin: usize, end: usize) -> Result<IncidenceSeries, DataError> {
    let len = s.counts.len();
    if begin >= end || end >= len {
        return Err(DataError::BadWindow { begin, end, len });
    }
    Ok(IncidenceSeries {
        region: s.region.clone(),
        start_date: s.start_date + chrono::Duration::days(begin as i64),
        counts: s.counts[begin..=end].to_vec(),
    })
}

impl IncidenceSeries {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Duration::days(self.counts.len() as i64 - 1)
    }
}
