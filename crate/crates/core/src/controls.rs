//! Exogenous control series: CSV loading, gap checks, monthly broadcasting.
//!
//! Input files are header CSVs with an ISO `date` column and one or more
//! numeric columns; empty cells mean missing. Columns declared monthly carry
//! each month's value onto every trading day of the *following* month.
//! Daily columns must cover every trading day between their first and last
//! observation; a hole is a hard error rather than silent interpolation.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::calendar::TradingCalendar;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("schema mismatch in {path}: {reason}")]
    SchemaMismatch { path: String, reason: String },
    #[error("daily series {column:?} is missing trading day {date}")]
    Gap { column: String, date: NaiveDate },
    #[error("monthly series {column:?} has more than one row in {year}-{month:02}")]
    DuplicateMonth {
        column: String,
        year: i32,
        month: u32,
    },
    #[error("failed to read controls: {0}")]
    Io(#[from] std::io::Error),
}

/// Daily-aligned table of named control columns.
#[derive(Debug, Clone, Default)]
pub struct ControlTable {
    columns: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
}

impl ControlTable {
    pub fn column(&self, name: &str) -> Option<&BTreeMap<NaiveDate, f64>> {
        self.columns.get(name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(|s| s.as_str())
    }

    pub fn insert_column(&mut self, name: &str, values: BTreeMap<NaiveDate, f64>) {
        self.columns.insert(name.to_string(), values);
    }

    /// Values aligned to the calendar's trading days (None where absent).
    pub fn aligned(&self, name: &str, cal: &TradingCalendar) -> Option<Vec<Option<f64>>> {
        let col = self.columns.get(name)?;
        Some(cal.days().iter().map(|d| col.get(d).copied()).collect())
    }
}

/// Load and merge control CSVs.
///
/// `monthly_columns` names the series observed once per month (e.g. survey
/// indices); their values are broadcast onto the next month's trading days.
pub fn load_exogenous(
    paths: &[&Path],
    cal: &TradingCalendar,
    monthly_columns: &[&str],
) -> Result<ControlTable, ControlError> {
    let mut table = ControlTable::default();
    for path in paths {
        load_one(path, cal, monthly_columns, &mut table)?;
    }
    Ok(table)
}

fn load_one(
    path: &Path,
    cal: &TradingCalendar,
    monthly_columns: &[&str],
    table: &mut ControlTable,
) -> Result<(), ControlError> {
    let path_str = path.display().to_string();
    let mismatch = |reason: String| ControlError::SchemaMismatch {
        path: path_str.clone(),
        reason,
    };

    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| mismatch(format!("unreadable header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("date") {
        return Err(mismatch("first column must be `date`".into()));
    }
    let names = &headers[1..];
    for name in names {
        if table.columns.contains_key(name) {
            return Err(mismatch(format!("duplicate column {name:?} across files")));
        }
    }

    let mut raw: Vec<BTreeMap<NaiveDate, f64>> = vec![BTreeMap::new(); names.len()];
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| mismatch(format!("row {}: {e}", row_idx + 2)))?;
        let date_str = record
            .get(0)
            .ok_or_else(|| mismatch(format!("row {}: empty row", row_idx + 2)))?;
        let date = NaiveDate::parse_from_str(date_str.trim(), "%Y-%m-%d")
            .map_err(|_| mismatch(format!("row {}: bad date {date_str:?}", row_idx + 2)))?;
        for (j, name) in names.iter().enumerate() {
            let cell = record.get(j + 1).unwrap_or("").trim();
            if cell.is_empty() {
                continue; // empty cell = missing
            }
            let value: f64 = cell.parse().map_err(|_| {
                mismatch(format!(
                    "row {}: column {name:?} has non-numeric value {cell:?}",
                    row_idx + 2
                ))
            })?;
            raw[j].insert(date, value);
        }
    }

    for (j, name) in names.iter().enumerate() {
        let observed = std::mem::take(&mut raw[j]);
        if observed.is_empty() {
            continue; // fully empty column: absent, dependent analyses disabled
        }
        let column = if monthly_columns.contains(&name.as_str()) {
            broadcast_monthly(name, &observed, cal)?
        } else {
            check_daily_gaps(name, &observed, cal)?;
            observed
        };
        table.columns.insert(name.clone(), column);
    }
    Ok(())
}

fn check_daily_gaps(
    name: &str,
    observed: &BTreeMap<NaiveDate, f64>,
    cal: &TradingCalendar,
) -> Result<(), ControlError> {
    let first = *observed.keys().next().expect("non-empty");
    let last = *observed.keys().next_back().expect("non-empty");
    for &day in cal.days() {
        if day >= first && day <= last && !observed.contains_key(&day) {
            return Err(ControlError::Gap {
                column: name.to_string(),
                date: day,
            });
        }
    }
    Ok(())
}

/// Each observed month's value lands on every trading day of the next month.
fn broadcast_monthly(
    name: &str,
    observed: &BTreeMap<NaiveDate, f64>,
    cal: &TradingCalendar,
) -> Result<BTreeMap<NaiveDate, f64>, ControlError> {
    let mut by_month: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    for (date, &value) in observed {
        let key = (date.year(), date.month());
        if by_month.insert(key, value).is_some() {
            return Err(ControlError::DuplicateMonth {
                column: name.to_string(),
                year: key.0,
                month: key.1,
            });
        }
    }
    let mut out = BTreeMap::new();
    for &day in cal.days() {
        let prev = previous_month(day.year(), day.month());
        if let Some(&value) = by_month.get(&prev) {
            out.insert(day, value);
        }
    }
    Ok(out)
}

fn previous_month(year: i32, month: u32) -> (i32, u32) {
    if month == 1 {
        (year - 1, 12)
    } else {
        (year, month - 1)
    }
}
