//! Dependent variables and controls: cumulative returns, realized
//! volatility, volume transforms, abnormal message counts, calendar
//! deseasonalization, characteristic sorts, and idiosyncratic volatility.
//!
//! Window operations are positional: `t` indexes into an ordered series
//! (trading-day or bucket order) and `(m, n)` are inclusive offsets.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use thiserror::Error;

use crate::ols::{self, OlsError};
use crate::stats;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("window [{lo}, {hi}] out of range for series of length {len}")]
    WindowOutOfRange { lo: i64, hi: i64, len: usize },
    #[error("window offsets must satisfy m <= n, got m={m}, n={n}")]
    BadWindow { m: i64, n: i64 },
    #[error("realized volatility needs >= 2 days in the window")]
    WindowTooShort,
    #[error("quintile sort needs >= 5 firms, got {0}")]
    TooFewFirms(usize),
    #[error("insufficient history: {got} observations < minimum {min}")]
    InsufficientHistory { got: usize, min: usize },
    #[error("rank deficient design")]
    RankDeficient,
    #[error("market data: {0}")]
    BadData(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ols(#[from] OlsError),
}

fn window_bounds(t: usize, m: i64, n: i64, len: usize) -> Result<(usize, usize), MetricsError> {
    if m > n {
        return Err(MetricsError::BadWindow { m, n });
    }
    let lo = t as i64 + m;
    let hi = t as i64 + n;
    if lo < 0 || hi >= len as i64 {
        return Err(MetricsError::WindowOutOfRange { lo, hi, len });
    }
    Ok((lo as usize, hi as usize))
}

/// Compounded simple return in percent over trading days `t+m ..= t+n`:
/// (prod(1 + r_i/100) - 1) * 100.
pub fn cum_return(returns: &[f64], t: usize, m: i64, n: i64) -> Result<f64, MetricsError> {
    let (lo, hi) = window_bounds(t, m, n, returns.len())?;
    let growth = returns[lo..=hi]
        .iter()
        .fold(1.0, |acc, r| acc * (1.0 + r / 100.0));
    Ok((growth - 1.0) * 100.0)
}

/// Sample standard deviation of daily returns over `t ..= t+n`.
pub fn realized_vol(returns: &[f64], t: usize, n: i64) -> Result<f64, MetricsError> {
    if n < 1 {
        return Err(MetricsError::WindowTooShort);
    }
    let (lo, hi) = window_bounds(t, 0, n, returns.len())?;
    Ok(stats::sample_sd(&returns[lo..=hi]))
}

/// ln(1 + total volume) over the window `t+m ..= t+n` of a bucket series.
pub fn log_total_volume(volumes: &[f64], t: usize, m: i64, n: i64) -> Result<f64, MetricsError> {
    let (lo, hi) = window_bounds(t, m, n, volumes.len())?;
    let total: f64 = volumes[lo..=hi].iter().sum();
    Ok((1.0 + total).ln())
}

/// Abnormal message count: ln(1 + count_t) minus ln(1 + median of the prior
/// 10 trading days). None while fewer than 10 prior days exist.
pub fn log_abn_messages(counts: &[f64], t: usize) -> Option<f64> {
    if t < 10 || t >= counts.len() {
        return None;
    }
    let med = stats::median(&counts[t - 10..t]);
    Some((1.0 + counts[t]).ln() - (1.0 + med).ln())
}

/// ln(1 + count).
pub fn log_ea(count: f64) -> f64 {
    (1.0 + count).ln()
}

/// Calendar-pattern removal scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deseasonalization {
    /// Residuals from projecting on day-of-week and month-of-year
    /// indicators plus an intercept.
    DayOfWeekMonth,
    /// Value minus its ISO calendar week's mean.
    WeekOfSample,
}

/// Remove calendar seasonality from a dated series.
pub fn deseasonalize(
    dates: &[NaiveDate],
    values: &[f64],
    scheme: Deseasonalization,
) -> Result<Vec<f64>, MetricsError> {
    assert_eq!(dates.len(), values.len(), "ragged deseasonalize input");
    match scheme {
        Deseasonalization::WeekOfSample => {
            let mut sums: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
            for (d, v) in dates.iter().zip(values) {
                let key = (d.iso_week().year(), d.iso_week().week());
                let entry = sums.entry(key).or_insert((0.0, 0));
                entry.0 += v;
                entry.1 += 1;
            }
            Ok(dates
                .iter()
                .zip(values)
                .map(|(d, v)| {
                    let key = (d.iso_week().year(), d.iso_week().week());
                    let (sum, count) = sums[&key];
                    v - sum / count as f64
                })
                .collect())
        }
        Deseasonalization::DayOfWeekMonth => {
            // Dummies for every observed category beyond the first.
            let mut dows: Vec<u32> = dates
                .iter()
                .map(|d| d.weekday().num_days_from_monday())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut months: Vec<u32> = dates
                .iter()
                .map(|d| d.month())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            if !dows.is_empty() {
                dows.remove(0);
            }
            if !months.is_empty() {
                months.remove(0);
            }
            let n = dates.len();
            let k = 1 + dows.len() + months.len();
            let mut x = DMatrix::zeros(n, k);
            for i in 0..n {
                x[(i, 0)] = 1.0;
                let dow = dates[i].weekday().num_days_from_monday();
                if let Some(j) = dows.iter().position(|&d| d == dow) {
                    x[(i, 1 + j)] = 1.0;
                }
                let month = dates[i].month();
                if let Some(j) = months.iter().position(|&m| m == month) {
                    x[(i, 1 + dows.len() + j)] = 1.0;
                }
            }
            let fit = ols::ols_fit(values, &x).map_err(|e| match e {
                OlsError::RankDeficient { .. } => MetricsError::RankDeficient,
                other => MetricsError::Ols(other),
            })?;
            Ok(fit.residuals)
        }
    }
}

/// One firm-day observation for sorts.
#[derive(Debug, Clone)]
pub struct FirmDay {
    pub firm_id: String,
    pub ret_pct: f64,
    pub mktcap: f64,
    pub characteristic: f64,
}

/// Value-weighted quintile portfolio returns for one date.
///
/// Firms are ranked on the characteristic (ties broken by firm id via a
/// stable sort); breakpoints are the 20/40/60/80 linear-interpolation
/// percentiles. Quintile 0 is the bottom. Empty quintiles (possible under
/// heavy ties) yield None.
pub fn quintile_portfolios(firms: &[FirmDay]) -> Result<[Option<f64>; 5], MetricsError> {
    if firms.len() < 5 {
        return Err(MetricsError::TooFewFirms(firms.len()));
    }
    let mut sorted: Vec<&FirmDay> = firms.iter().collect();
    sorted.sort_by(|a, b| {
        a.characteristic
            .partial_cmp(&b.characteristic)
            .expect("finite characteristic")
            .then_with(|| a.firm_id.cmp(&b.firm_id))
    });
    let values: Vec<f64> = sorted.iter().map(|f| f.characteristic).collect();
    let breakpoints: Vec<f64> = [20.0, 40.0, 60.0, 80.0]
        .iter()
        .map(|&p| stats::percentile_interpolated(&values, p))
        .collect();

    let mut weight_sum = [0.0f64; 5];
    let mut weighted_ret = [0.0f64; 5];
    for firm in &sorted {
        let q = breakpoints
            .iter()
            .position(|&bp| firm.characteristic <= bp)
            .unwrap_or(4);
        weight_sum[q] += firm.mktcap;
        weighted_ret[q] += firm.mktcap * firm.ret_pct;
    }
    let mut out = [None; 5];
    for q in 0..5 {
        if weight_sum[q] > 0.0 {
            out[q] = Some(weighted_ret[q] / weight_sum[q]);
        }
    }
    Ok(out)
}

/// Idiosyncratic volatility: sample standard deviation of the residuals
/// from regressing firm returns on the factor columns plus an intercept
/// over the supplied lookback window.
///
/// Degenerate factor columns (all zero) are tolerated: the projection is
/// still unique, so the residual spread is well defined.
pub fn idio_vol(
    firm_returns: &[f64],
    factors: &[&[f64]],
    min_obs: usize,
) -> Result<f64, MetricsError> {
    let n = firm_returns.len();
    if n < min_obs {
        return Err(MetricsError::InsufficientHistory { got: n, min: min_obs });
    }
    let k = factors.len() + 1;
    if n <= k {
        return Err(MetricsError::RankDeficient);
    }
    let x = ols::design_with_intercept(factors);
    let residuals = ols::projection_residuals(firm_returns, &x)?;
    Ok(stats::sample_sd(&residuals))
}

// ---------------------------------------------------------------------------
// Market panel loading
// ---------------------------------------------------------------------------

/// One 30-minute market observation.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketRow {
    pub date: NaiveDate,
    pub slot: u8,
    pub ret_pct: f64,
    pub volume: f64,
}

/// Firm-level daily panel plus per-date factor rows.
#[derive(Debug, Clone, Default)]
pub struct FirmPanel {
    /// date -> (firm_id, ret_pct, mktcap)
    pub rows: BTreeMap<NaiveDate, Vec<(String, f64, f64)>>,
    pub factor_names: Vec<String>,
    /// date -> factor values (aligned with factor_names)
    pub factors: BTreeMap<NaiveDate, Vec<f64>>,
}

/// Daily index returns: CSV `date,ret_pct`.
pub fn load_market_csv(path: &Path) -> Result<BTreeMap<NaiveDate, f64>, MetricsError> {
    let mut rdr = csv::Reader::from_path(path).map_err(bad_csv)?;
    let headers = rdr.headers().map_err(bad_csv)?.clone();
    if headers.get(0) != Some("date") || headers.get(1) != Some("ret_pct") {
        return Err(MetricsError::BadData(format!(
            "{}: expected header date,ret_pct",
            path.display()
        )));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(bad_csv)?;
        let date = parse_date(rec.get(0).unwrap_or(""))?;
        let ret: f64 = parse_num(rec.get(1).unwrap_or(""), "ret_pct")?;
        if !ret.is_finite() {
            return Err(MetricsError::BadData(format!("non-finite return on {date}")));
        }
        out.insert(date, ret);
    }
    Ok(out)
}

/// Bucket-level market data: CSV `date,slot,ret_pct,volume`.
pub fn load_bucket_csv(path: &Path) -> Result<Vec<BucketRow>, MetricsError> {
    let mut rdr = csv::Reader::from_path(path).map_err(bad_csv)?;
    let headers = rdr.headers().map_err(bad_csv)?.clone();
    let expected = ["date", "slot", "ret_pct", "volume"];
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(MetricsError::BadData(format!(
                "{}: expected header {}",
                path.display(),
                expected.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(bad_csv)?;
        let date = parse_date(rec.get(0).unwrap_or(""))?;
        let slot: u8 = rec
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| MetricsError::BadData(format!("bad slot on {date}")))?;
        if slot >= crate::calendar::SLOTS_PER_DAY {
            return Err(MetricsError::BadData(format!("slot {slot} out of range")));
        }
        let ret_pct = parse_num(rec.get(2).unwrap_or(""), "ret_pct")?;
        let volume = parse_num(rec.get(3).unwrap_or(""), "volume")?;
        if volume < 0.0 {
            return Err(MetricsError::BadData(format!("negative volume on {date}")));
        }
        rows.push(BucketRow {
            date,
            slot,
            ret_pct,
            volume,
        });
    }
    rows.sort_by(|a, b| (a.date, a.slot).cmp(&(b.date, b.slot)));
    Ok(rows)
}

/// Firm panel: CSV `date,firm_id,ret_pct,mktcap,<factor columns...>`.
pub fn load_firm_panel_csv(path: &Path) -> Result<FirmPanel, MetricsError> {
    let mut rdr = csv::Reader::from_path(path).map_err(bad_csv)?;
    let headers = rdr.headers().map_err(bad_csv)?.clone();
    let fixed = ["date", "firm_id", "ret_pct", "mktcap"];
    for (i, name) in fixed.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(MetricsError::BadData(format!(
                "{}: expected header to start with {}",
                path.display(),
                fixed.join(",")
            )));
        }
    }
    let factor_names: Vec<String> = headers.iter().skip(4).map(String::from).collect();
    let mut panel = FirmPanel {
        factor_names,
        ..FirmPanel::default()
    };
    for rec in rdr.records() {
        let rec = rec.map_err(bad_csv)?;
        let date = parse_date(rec.get(0).unwrap_or(""))?;
        let firm = rec.get(1).unwrap_or("").to_string();
        let ret = parse_num(rec.get(2).unwrap_or(""), "ret_pct")?;
        let cap = parse_num(rec.get(3).unwrap_or(""), "mktcap")?;
        let mut factors = Vec::with_capacity(panel.factor_names.len());
        for i in 0..panel.factor_names.len() {
            factors.push(parse_num(rec.get(4 + i).unwrap_or(""), "factor")?);
        }
        panel.rows.entry(date).or_default().push((firm, ret, cap));
        panel.factors.entry(date).or_insert(factors);
    }
    for rows in panel.rows.values_mut() {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
    }
    Ok(panel)
}

fn bad_csv(e: csv::Error) -> MetricsError {
    MetricsError::BadData(e.to_string())
}

fn parse_date(s: &str) -> Result<NaiveDate, MetricsError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| MetricsError::BadData(format!("bad date {s:?}")))
}

fn parse_num(s: &str, field: &str) -> Result<f64, MetricsError> {
    s.trim()
        .parse()
        .map_err(|_| MetricsError::BadData(format!("bad {field} value {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cum_return_hand_compounding() {
        // 1% then -1%: 1.01 * 0.99 = 0.9999 -> -0.01%.
        let r = [1.0, -1.0];
        assert_abs_diff_eq!(cum_return(&r, 0, 0, 1).unwrap(), -0.01, epsilon = 1e-10);
    }

    #[test]
    fn cum_return_zero_window_and_identity() {
        let r = [0.0, 0.0, 0.0];
        assert_abs_diff_eq!(cum_return(&r, 0, 0, 2).unwrap(), 0.0);
        let r = [0.7, -0.3, 1.2];
        assert_abs_diff_eq!(cum_return(&r, 1, 0, 0).unwrap(), -0.3, epsilon = 1e-12);
    }

    #[test]
    fn cum_return_window_bounds_checked() {
        let r = [1.0, 2.0];
        assert!(matches!(
            cum_return(&r, 1, 0, 1),
            Err(MetricsError::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            cum_return(&r, 0, 1, 0),
            Err(MetricsError::BadWindow { .. })
        ));
    }

    #[test]
    fn realized_vol_alternating_and_constant() {
        let alternating = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        // var = 6/5, sd ~= 1.0954.
        assert_abs_diff_eq!(
            realized_vol(&alternating, 0, 5).unwrap(),
            (1.2f64).sqrt(),
            epsilon = 1e-10
        );
        let constant = [0.4; 6];
        assert_abs_diff_eq!(realized_vol(&constant, 0, 5).unwrap(), 0.0);
        assert!(matches!(
            realized_vol(&constant, 0, 0),
            Err(MetricsError::WindowTooShort)
        ));
    }

    #[test]
    fn log_volume_cases() {
        assert_abs_diff_eq!(log_total_volume(&[0.0, 0.0], 0, 0, 1).unwrap(), 0.0);
        let e_minus_1 = std::f64::consts::E - 1.0;
        assert_abs_diff_eq!(
            log_total_volume(&[e_minus_1], 0, 0, 0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            log_total_volume(&[10.0, 20.0], 0, 0, 1).unwrap(),
            31.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn abnormal_messages_warmup_and_values() {
        let mut counts = vec![100.0; 11];
        assert_abs_diff_eq!(log_abn_messages(&counts, 10).unwrap(), 0.0);
        counts[10] = 200.0;
        assert_abs_diff_eq!(
            log_abn_messages(&counts, 10).unwrap(),
            201.0f64.ln() - 101.0f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(log_abn_messages(&counts, 9), None);
    }

    #[test]
    fn log_ea_values() {
        assert_abs_diff_eq!(log_ea(0.0), 0.0);
        assert_abs_diff_eq!(log_ea(std::f64::consts::E - 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(log_ea(7.0), 8.0f64.ln(), epsilon = 1e-12);
    }

    fn weekday_dates(n: usize) -> Vec<NaiveDate> {
        crate::calendar::TradingCalendar::weekdays(
            NaiveDate::from_ymd_opt(2021, 1, 4).unwrap(),
            n,
        )
        .days()
        .to_vec()
    }

    #[test]
    fn pure_day_of_week_pattern_is_removed() {
        let dates = weekday_dates(60);
        let values: Vec<f64> = dates
            .iter()
            .map(|d| d.weekday().num_days_from_monday() as f64 * 2.0)
            .collect();
        let resid = deseasonalize(&dates, &values, Deseasonalization::DayOfWeekMonth).unwrap();
        for r in resid {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn week_of_sample_subtracts_week_means() {
        let dates = weekday_dates(10); // two full ISO weeks
        let values: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 3.0 }).collect();
        let resid = deseasonalize(&dates, &values, Deseasonalization::WeekOfSample).unwrap();
        for r in resid {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        }
    }

    fn firm(id: &str, ret: f64, cap: f64, ch: f64) -> FirmDay {
        FirmDay {
            firm_id: id.into(),
            ret_pct: ret,
            mktcap: cap,
            characteristic: ch,
        }
    }

    #[test]
    fn ten_distinct_firms_split_two_per_quintile() {
        let firms: Vec<FirmDay> = (0..10)
            .map(|i| firm(&format!("f{i}"), i as f64, 1.0, i as f64))
            .collect();
        let q = quintile_portfolios(&firms).unwrap();
        // Equal weights: quintile means are (0+1)/2, (2+3)/2, ...
        for (i, v) in q.iter().enumerate() {
            assert_abs_diff_eq!(v.unwrap(), (4 * i + 1) as f64 / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn equal_returns_make_every_quintile_equal() {
        let firms: Vec<FirmDay> = (0..15)
            .map(|i| firm(&format!("f{i:02}"), 0.8, 1.0, i as f64))
            .collect();
        let q = quintile_portfolios(&firms).unwrap();
        for v in q {
            assert_abs_diff_eq!(v.unwrap(), 0.8, epsilon = 1e-12);
        }
    }

    #[test]
    fn value_weighting_matches_hand_computation() {
        // caps [1,1,2], returns [1,2,3] -> (1+2+6)/4 = 2.25 within a quintile.
        let firms = vec![
            firm("a", 1.0, 1.0, 0.0),
            firm("b", 2.0, 1.0, 0.0),
            firm("c", 3.0, 2.0, 0.0),
            firm("d", 0.0, 1.0, 10.0),
            firm("e", 0.0, 1.0, 20.0),
            firm("f", 0.0, 1.0, 30.0),
            firm("g", 0.0, 1.0, 40.0),
            firm("h", 0.0, 1.0, 50.0),
        ];
        let q = quintile_portfolios(&firms).unwrap();
        assert_abs_diff_eq!(q[0].unwrap(), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn too_few_firms_is_an_error() {
        let firms = vec![firm("a", 1.0, 1.0, 0.0)];
        assert!(matches!(
            quintile_portfolios(&firms),
            Err(MetricsError::TooFewFirms(1))
        ));
    }

    #[test]
    fn idio_vol_exact_span_is_zero() {
        let f1: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = f1.iter().map(|v| 2.0 * v + 0.5).collect();
        let v = idio_vol(&y, &[&f1], 24).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn idio_vol_zero_factors_equals_demeaned_sd() {
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        let zeros = vec![0.0; 30];
        let v = idio_vol(&y, &[&zeros], 24).unwrap();
        assert_abs_diff_eq!(v, stats::sample_sd(&y), epsilon = 1e-10);
    }

    #[test]
    fn idio_vol_requires_history() {
        let y = vec![1.0; 10];
        let f = vec![0.5; 10];
        assert!(matches!(
            idio_vol(&y, &[&f], 24),
            Err(MetricsError::InsufficientHistory { got: 10, min: 24 })
        ));
    }
}
