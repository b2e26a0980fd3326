//! Dated sentiment series with standardization metadata.

use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series keys must be strictly increasing (at {0})")]
    UnorderedKeys(String),
    #[error("standardize needs at least 2 non-missing points, got {0}")]
    TooFewPoints(usize),
    #[error("standardize needs nonzero sample variance")]
    ZeroVariance,
    #[error("bad series key {0:?}")]
    BadKey(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Key of one observation: a trading day, or a (day, 30-minute slot) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeriesKey {
    Day(NaiveDate),
    Slot(NaiveDate, u8),
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesKey::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            SeriesKey::Slot(d, s) => write!(f, "{}Tslot{s:02}", d.format("%Y-%m-%d")),
        }
    }
}

impl SeriesKey {
    pub fn parse(s: &str) -> Result<Self, SeriesError> {
        if let Some((day, slot)) = s.split_once("Tslot") {
            let d = NaiveDate::parse_from_str(day, "%Y-%m-%d")
                .map_err(|_| SeriesError::BadKey(s.to_string()))?;
            let slot: u8 = slot.parse().map_err(|_| SeriesError::BadKey(s.to_string()))?;
            Ok(SeriesKey::Slot(d, slot))
        } else {
            let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|_| SeriesError::BadKey(s.to_string()))?;
            Ok(SeriesKey::Day(d))
        }
    }

    pub fn day(&self) -> NaiveDate {
        match *self {
            SeriesKey::Day(d) | SeriesKey::Slot(d, _) => d,
        }
    }
}

/// What a sentiment series measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Flavor {
    Gif,
    Pos,
    Neg,
    SelfDec,
    Text,
    Disagreement,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flavor::Gif => "GIF",
            Flavor::Pos => "POS",
            Flavor::Neg => "NEG",
            Flavor::SelfDec => "SELFDEC",
            Flavor::Text => "TEXT",
            Flavor::Disagreement => "DISAGREEMENT",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Bucket,
}

/// The (mean, sd) pair a standardized series was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

/// A dated real-valued series; points may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentSeries {
    pub flavor: Flavor,
    pub frequency: Frequency,
    points: Vec<(SeriesKey, Option<f64>)>,
    pub standardization: Option<Standardization>,
}

impl SentimentSeries {
    pub fn new(
        flavor: Flavor,
        frequency: Frequency,
        points: Vec<(SeriesKey, Option<f64>)>,
    ) -> Result<Self, SeriesError> {
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(SeriesError::UnorderedKeys(pair[1].0.to_string()));
            }
        }
        Ok(Self {
            flavor,
            frequency,
            points,
            standardization: None,
        })
    }

    pub fn points(&self) -> &[(SeriesKey, Option<f64>)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, key: &SeriesKey) -> Option<f64> {
        self.points
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .and_then(|i| self.points[i].1)
    }

    /// Non-missing values in key order.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().filter_map(|(_, v)| *v).collect()
    }

    /// Zero-mean unit-variance transform using the sample (n-1) standard
    /// deviation over non-missing points; missing points stay missing and
    /// the (mean, sd) pair is stored for exact inversion.
    pub fn standardize(&self) -> Result<SentimentSeries, SeriesError> {
        let values = self.values();
        if values.len() < 2 {
            return Err(SeriesError::TooFewPoints(values.len()));
        }
        let mean = stats::mean(&values);
        let sd = stats::sample_sd(&values);
        if sd == 0.0 || !sd.is_finite() {
            return Err(SeriesError::ZeroVariance);
        }
        let points = self
            .points
            .iter()
            .map(|&(k, v)| (k, v.map(|x| (x - mean) / sd)))
            .collect();
        Ok(SentimentSeries {
            flavor: self.flavor,
            frequency: self.frequency,
            points,
            standardization: Some(Standardization { mean, sd }),
        })
    }

    /// Invert a standardized series back to raw units via its stored
    /// (mean, sd). Returns a copy unchanged if never standardized.
    pub fn destandardize(&self) -> SentimentSeries {
        let Some(Standardization { mean, sd }) = self.standardization else {
            return self.clone();
        };
        let points = self
            .points
            .iter()
            .map(|&(k, v)| (k, v.map(|x| x * sd + mean)))
            .collect();
        SentimentSeries {
            flavor: self.flavor,
            frequency: self.frequency,
            points,
            standardization: None,
        }
    }

    /// Absolute-value transform (used for volatility and volume analyses).
    pub fn abs(&self) -> SentimentSeries {
        SentimentSeries {
            flavor: self.flavor,
            frequency: self.frequency,
            points: self
                .points
                .iter()
                .map(|&(k, v)| (k, v.map(f64::abs)))
                .collect(),
            standardization: None,
        }
    }
}

/// Write a series CSV: `key,flavor,raw,standardized`.
///
/// `standardized` should be the standardize() output of `raw`; pass None to
/// leave that column empty. Float formatting uses the shortest round-trip
/// representation, so output bytes are stable across runs.
pub fn write_series_csv(
    path: &Path,
    raw: &SentimentSeries,
    standardized: Option<&SentimentSeries>,
) -> Result<(), SeriesError> {
    let mut out = String::from("key,flavor,raw,standardized\n");
    for (i, (key, value)) in raw.points().iter().enumerate() {
        let std_value = standardized.and_then(|s| {
            debug_assert_eq!(s.points()[i].0, *key);
            s.points()[i].1
        });
        out.push_str(&format!(
            "{key},{},{},{}\n",
            raw.flavor,
            value.map(|v| v.to_string()).unwrap_or_default(),
            std_value.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn day(d: u32) -> SeriesKey {
        SeriesKey::Day(NaiveDate::from_ymd_opt(2021, 3, d).unwrap())
    }

    fn series(values: &[Option<f64>]) -> SentimentSeries {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (day(1 + i as u32), v))
            .collect();
        SentimentSeries::new(Flavor::Gif, Frequency::Daily, points).unwrap()
    }

    #[test]
    fn standardize_one_two_three() {
        let s = series(&[Some(1.0), Some(2.0), Some(3.0)]);
        let z = s.standardize().unwrap();
        let vals = z.values();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
        let meta = z.standardization.unwrap();
        assert_abs_diff_eq!(meta.mean, 2.0);
        assert_abs_diff_eq!(meta.sd, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn standardize_is_idempotent_and_invertible() {
        let s = series(&[Some(0.4), None, Some(-0.2), Some(0.9), Some(0.1)]);
        let z = s.standardize().unwrap();
        let zz = z.standardize().unwrap();
        for (a, b) in z.values().iter().zip(zz.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let back = z.destandardize();
        for (a, b) in s.values().iter().zip(back.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // Missing points stay missing.
        assert!(z.points()[1].1.is_none());
    }

    #[test]
    fn constant_series_is_zero_variance() {
        let s = series(&[Some(0.5), Some(0.5), Some(0.5)]);
        assert!(matches!(s.standardize(), Err(SeriesError::ZeroVariance)));
    }

    #[test]
    fn single_point_is_too_few() {
        let s = series(&[Some(0.5), None]);
        assert!(matches!(s.standardize(), Err(SeriesError::TooFewPoints(1))));
    }

    #[test]
    fn keys_must_increase() {
        let points = vec![(day(2), Some(1.0)), (day(1), Some(2.0))];
        assert!(matches!(
            SentimentSeries::new(Flavor::Gif, Frequency::Daily, points),
            Err(SeriesError::UnorderedKeys(_))
        ));
    }

    #[test]
    fn key_strings_round_trip() {
        let k1 = day(5);
        let k2 = SeriesKey::Slot(NaiveDate::from_ymd_opt(2021, 3, 5).unwrap(), 7);
        assert_eq!(SeriesKey::parse(&k1.to_string()).unwrap(), k1);
        assert_eq!(SeriesKey::parse(&k2.to_string()).unwrap(), k2);
        assert_eq!(k2.to_string(), "2021-03-05Tslot07");
    }
}
