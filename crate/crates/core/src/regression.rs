//! Regression harness: named series, window specs, sample filters, and
//! table rendering.
//!
//! A [`SeriesStore`] holds keyed series (daily or bucket frequency). A
//! [`RegressionSpec`] names a dependent series with inclusive window
//! offsets and an aggregation, regressors, controls, the inference method,
//! and sample filters. Rows are aligned on the dependent's key axis with
//! listwise deletion; every dropped or excluded observation is reported in
//! the result so no sample change is silent.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::bootstrap::{block_bootstrap_se, BootstrapError};
use crate::diagnostics::{dfbeta_filter, winsorize, DiagnosticsError};
use crate::metrics;
use crate::nelson_kim::{nelson_kim_pvalue, NelsonKimError, NelsonKimResult};
use crate::ols::{ols_fit, OlsError};
use crate::series::{SentimentSeries, SeriesKey};
use crate::stats;

#[derive(Debug, Error)]
pub enum EconError {
    #[error("unknown series id {0:?}")]
    UnknownSeries(String),
    #[error("too few usable rows: {kept} after alignment, need > {needed}")]
    TooFewRows { kept: usize, needed: usize },
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
    #[error(transparent)]
    NelsonKim(#[from] NelsonKimError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// How a dependent window is collapsed to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowAgg {
    /// Compounded simple return in percent.
    Compound,
    /// Sample standard deviation over the window (realized volatility).
    SampleSd,
    /// ln(1 + sum) over the window (volume).
    LogSum1p,
    /// Plain mean over the window (flows).
    Mean,
}

#[derive(Debug, Clone, Serialize)]
pub struct DependentSpec {
    pub series: String,
    pub m: i64,
    pub n: i64,
    pub agg: WindowAgg,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressorSpec {
    pub series: String,
    /// Use |value| instead of the level.
    pub absolute: bool,
    /// Row label; defaults to the series id.
    pub label: Option<String>,
}

impl RegressorSpec {
    pub fn level(series: &str) -> Self {
        Self {
            series: series.into(),
            absolute: false,
            label: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            if self.absolute {
                format!("|{}|", self.series)
            } else {
                self.series.clone()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Inference {
    Classical,
    BlockBootstrap { block_len: usize, reps: usize },
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SampleFilters {
    /// Winsorize the dependent variable at this percentile pair.
    pub winsorize_pct: Option<f64>,
    /// Exclude rows with |DFBETA| > 2/sqrt(n) on the first regressor.
    pub dfbeta: bool,
    /// Keep only rows whose key day falls in this inclusive range.
    pub date_range: Option<(NaiveDate, NaiveDate)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionSpec {
    /// Column label in rendered tables.
    pub name: String,
    pub dependent: DependentSpec,
    pub regressors: Vec<RegressorSpec>,
    pub controls: Vec<String>,
    pub inference: Inference,
    /// Extra randomized p-value for the first regressor.
    pub nelson_kim_reps: Option<usize>,
    pub filters: SampleFilters,
    pub seed: u64,
}

/// One estimated term.
#[derive(Debug, Clone, Serialize)]
pub struct TermResult {
    pub name: String,
    pub coefficient: f64,
    pub standard_error: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedRow {
    pub key: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceMeta {
    pub method: String,
    pub block_len: Option<usize>,
    pub reps: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NelsonKimMeta {
    pub p_value: f64,
    pub ar_rho: f64,
    pub permutation_fallback: bool,
    pub reps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub name: String,
    /// Intercept first, then regressors and controls in spec order.
    pub terms: Vec<TermResult>,
    pub n: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub inference: InferenceMeta,
    pub nelson_kim: Option<NelsonKimMeta>,
    /// Candidate rows dropped by listwise deletion.
    pub dropped_missing: usize,
    /// Rows excluded by filters, with reasons.
    pub excluded: Vec<ExcludedRow>,
}

/// Keyed series container for the harness.
#[derive(Debug, Default, Clone)]
pub struct SeriesStore {
    series: BTreeMap<String, StoredSeries>,
}

#[derive(Debug, Clone)]
pub struct StoredSeries {
    pub keys: Vec<SeriesKey>,
    pub values: Vec<Option<f64>>,
}

impl StoredSeries {
    fn get(&self, key: &SeriesKey) -> Option<f64> {
        self.keys
            .binary_search(key)
            .ok()
            .and_then(|i| self.values[i])
    }
}

impl SeriesStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, keys: Vec<SeriesKey>, values: Vec<Option<f64>>) {
        assert_eq!(keys.len(), values.len(), "ragged series insert");
        debug_assert!(keys.windows(2).all(|w| w[0] < w[1]), "unsorted series keys");
        self.series
            .insert(name.to_string(), StoredSeries { keys, values });
    }

    pub fn insert_sentiment(&mut self, name: &str, series: &SentimentSeries) {
        let (keys, values) = series.points().iter().cloned().unzip();
        self.insert(name, keys, values);
    }

    pub fn insert_daily(&mut self, name: &str, points: &[(NaiveDate, Option<f64>)]) {
        let keys = points.iter().map(|&(d, _)| SeriesKey::Day(d)).collect();
        let values = points.iter().map(|&(_, v)| v).collect();
        self.insert(name, keys, values);
    }

    pub fn get(&self, name: &str) -> Option<&StoredSeries> {
        self.series.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    fn resolve(&self, name: &str) -> Result<&StoredSeries, EconError> {
        self.series
            .get(name)
            .ok_or_else(|| EconError::UnknownSeries(name.to_string()))
    }
}

/// Dependent value for base position `t`, or None when the window leaves
/// the series or crosses a missing point.
fn window_value(base: &StoredSeries, t: usize, spec: &DependentSpec) -> Option<f64> {
    let lo = t as i64 + spec.m;
    let hi = t as i64 + spec.n;
    if lo < 0 || hi >= base.keys.len() as i64 || lo > hi {
        return None;
    }
    let mut window = Vec::with_capacity((hi - lo + 1) as usize);
    for i in lo..=hi {
        window.push(base.values[i as usize]?);
    }
    Some(match spec.agg {
        WindowAgg::Compound => {
            (window.iter().fold(1.0, |acc, r| acc * (1.0 + r / 100.0)) - 1.0) * 100.0
        }
        WindowAgg::SampleSd => {
            if window.len() < 2 {
                return None;
            }
            stats::sample_sd(&window)
        }
        WindowAgg::LogSum1p => (1.0 + window.iter().sum::<f64>()).ln(),
        WindowAgg::Mean => stats::mean(&window),
    })
}

/// Estimate one regression spec against the store.
pub fn run_regression(spec: &RegressionSpec, store: &SeriesStore) -> Result<RegressionResult, EconError> {
    let base = store.resolve(&spec.dependent.series)?;
    let mut column_series = Vec::new();
    for r in &spec.regressors {
        column_series.push((r.label(), store.resolve(&r.series)?, r.absolute));
    }
    for c in &spec.controls {
        column_series.push((c.clone(), store.resolve(c)?, false));
    }

    // Row alignment on the dependent's key axis.
    let mut keys = Vec::new();
    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); column_series.len()];
    let mut dropped_missing = 0usize;
    for (t, key) in base.keys.iter().enumerate() {
        if let Some((lo, hi)) = spec.filters.date_range {
            let day = key.day();
            if day < lo || day > hi {
                continue;
            }
        }
        let dep = window_value(base, t, &spec.dependent);
        let row: Option<Vec<f64>> = column_series
            .iter()
            .map(|(_, s, absolute)| {
                s.get(key).map(|v| if *absolute { v.abs() } else { v })
            })
            .collect();
        match (dep, row) {
            (Some(dep), Some(row)) => {
                keys.push(*key);
                y.push(dep);
                for (col, v) in cols.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            _ => dropped_missing += 1,
        }
    }

    let k = column_series.len() + 1;
    if y.len() <= k {
        return Err(EconError::TooFewRows {
            kept: y.len(),
            needed: k,
        });
    }

    let mut excluded = Vec::new();
    if let Some(pct) = spec.filters.winsorize_pct {
        y = winsorize(&y, pct)?;
    }

    let col_refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let mut x = crate::ols::design_with_intercept(&col_refs);

    if spec.filters.dfbeta && !spec.regressors.is_empty() {
        let screen = dfbeta_filter(&y, &x, 1, None)?;
        if !screen.excluded.is_empty() {
            for &i in &screen.excluded {
                excluded.push(ExcludedRow {
                    key: keys[i].to_string(),
                    reason: format!(
                        "dfbeta {:.4} above threshold {:.4}",
                        screen.dfbetas[i], screen.threshold
                    ),
                });
            }
            let kept_rows = screen.retained;
            y = kept_rows.iter().map(|&i| y[i]).collect();
            keys = kept_rows.iter().map(|&i| keys[i]).collect();
            let mut kept_x = nalgebra::DMatrix::zeros(kept_rows.len(), k);
            for (row, &i) in kept_rows.iter().enumerate() {
                for j in 0..k {
                    kept_x[(row, j)] = x[(i, j)];
                }
            }
            x = kept_x;
        }
    }

    let fit = ols_fit(&y, &x)?;
    let (se, p, inference) = match spec.inference {
        Inference::Classical => (
            fit.standard_errors.clone(),
            fit.p_values.clone(),
            InferenceMeta {
                method: "classical".into(),
                block_len: None,
                reps: None,
                seed: spec.seed,
            },
        ),
        Inference::BlockBootstrap { block_len, reps } => {
            let boot = block_bootstrap_se(&y, &x, block_len, reps, spec.seed)?;
            (
                boot.standard_errors,
                boot.p_values,
                InferenceMeta {
                    method: "block_bootstrap".into(),
                    block_len: Some(block_len),
                    reps: Some(reps),
                    seed: spec.seed,
                },
            )
        }
    };

    let nelson_kim = match spec.nelson_kim_reps {
        Some(reps) if !spec.regressors.is_empty() => {
            let nk: NelsonKimResult = nelson_kim_pvalue(&y, &x, 1, reps, spec.seed)?;
            Some(NelsonKimMeta {
                p_value: nk.p_value,
                ar_rho: nk.ar_rho,
                permutation_fallback: nk.permutation_fallback,
                reps: nk.reps,
            })
        }
        _ => None,
    };

    let mut names = vec!["Constant".to_string()];
    names.extend(column_series.iter().map(|(n, _, _)| n.clone()));
    let terms = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| TermResult {
            name,
            coefficient: fit.coefficients[j],
            standard_error: se[j],
            p_value: p[j],
        })
        .collect();

    Ok(RegressionResult {
        name: spec.name.clone(),
        terms,
        n: fit.n,
        r_squared: fit.r_squared,
        adj_r_squared: fit.adj_r_squared,
        inference,
        nelson_kim,
        dropped_missing,
        excluded,
    })
}

/// A rendered collection of regression columns.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionTable {
    pub title: String,
    pub columns: Vec<RegressionResult>,
}

/// Estimate every spec in order.
pub fn run_table(
    title: &str,
    specs: &[RegressionSpec],
    store: &SeriesStore,
) -> Result<RegressionTable, EconError> {
    let mut columns = Vec::with_capacity(specs.len());
    for spec in specs {
        columns.push(run_regression(spec, store)?);
    }
    Ok(RegressionTable {
        title: title.to_string(),
        columns,
    })
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

impl RegressionTable {
    fn term_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for col in &self.columns {
            for term in &col.terms {
                if !rows.contains(&term.name) {
                    rows.push(term.name.clone());
                }
            }
        }
        rows
    }

    /// Aligned markdown: coefficient with stars over (standard error).
    pub fn render_markdown(&self) -> String {
        let rows = self.term_rows();
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["VARIABLES".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        cells.push(header);
        for row in &rows {
            let mut line = vec![row.clone()];
            for col in &self.columns {
                match col.terms.iter().find(|t| &t.name == row) {
                    Some(t) => line.push(format!(
                        "{:.4}{} ({:.4})",
                        t.coefficient,
                        significance_stars(t.p_value),
                        t.standard_error
                    )),
                    None => line.push(String::new()),
                }
            }
            cells.push(line);
        }
        let mut n_row = vec!["Observations".to_string()];
        n_row.extend(self.columns.iter().map(|c| c.n.to_string()));
        cells.push(n_row);
        let mut r2_row = vec!["Adjusted R-squared".to_string()];
        r2_row.extend(self.columns.iter().map(|c| format!("{:.3}", c.adj_r_squared)));
        cells.push(r2_row);

        let n_cols = cells[0].len();
        let widths: Vec<usize> = (0..n_cols)
            .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("### {}\n\n", self.title);
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, c)| format!("{:width$}", c, width = widths[j]))
                .collect();
            out.push_str(&format!("| {} |\n", line.join(" | ")));
            if i == 0 {
                let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(&format!("| {} |\n", sep.join(" | ")));
            }
        }
        out
    }

    /// Long-format CSV: `table,column,term,coefficient,se,p,stars`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("table,column,term,coefficient,se,p,stars\n");
        for col in &self.columns {
            for t in &col.terms {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    self.title,
                    col.name,
                    t.name,
                    t.coefficient,
                    t.standard_error,
                    t.p_value,
                    significance_stars(t.p_value)
                ));
            }
            out.push_str(&format!(
                "{},{},Observations,{},,,\n",
                self.title, col.name, col.n
            ));
            out.push_str(&format!(
                "{},{},AdjustedR2,{},,,\n",
                self.title, col.name, col.adj_r_squared
            ));
        }
        out
    }

    /// Sidecar metadata: inference method, seed, sample accounting.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "table": self.title,
            "columns": self.columns.iter().map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "n": c.n,
                    "adj_r_squared": c.adj_r_squared,
                    "inference": c.inference,
                    "nelson_kim": c.nelson_kim,
                    "dropped_missing": c.dropped_missing,
                    "excluded": c.excluded,
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Correlation table entry (Pearson r with its p-value).
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationCell {
    pub row: String,
    pub column: String,
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Pairwise Pearson correlations between a set of row series and a set of
/// column series, pairing on common non-missing keys.
pub fn correlation_table(
    rows: &[(&str, &StoredSeries)],
    cols: &[(&str, &StoredSeries)],
) -> Vec<CorrelationCell> {
    let mut out = Vec::new();
    for (row_name, row_series) in rows {
        for (col_name, col_series) in cols {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (i, key) in row_series.keys.iter().enumerate() {
                if let (Some(x), Some(y)) = (row_series.values[i], col_series.get(key)) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            match crate::diagnostics::pearson_test(&xs, &ys) {
                Ok((r, p)) => out.push(CorrelationCell {
                    row: row_name.to_string(),
                    column: col_name.to_string(),
                    r,
                    p,
                    n: xs.len(),
                }),
                Err(_) => out.push(CorrelationCell {
                    row: row_name.to_string(),
                    column: col_name.to_string(),
                    r: f64::NAN,
                    p: f64::NAN,
                    n: xs.len(),
                }),
            }
        }
    }
    out
}
