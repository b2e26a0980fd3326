//! Expanding-window per-GIF valence ledger.
//!
//! The ledger is the no-look-ahead state: after advancing through trading
//! day `t` it is a pure function of posts with trading day <= t. Counters
//! only ever grow, and each (post, GIF) pair contributes exactly one
//! appearance plus at most one declaration, so
//! `bullish + bearish <= appearances` holds for every GIF at all times.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::post::{Declaration, PostRecord};
use crate::stats;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("out of order: ledger is at {as_of:?}, got day {day}")]
    OutOfOrder {
        as_of: Option<NaiveDate>,
        day: NaiveDate,
    },
    #[error("unknown GIF {0:?}")]
    UnknownGif(String),
    #[error("ledger is empty")]
    EmptyLedger,
    #[error("appearance percentile must be 50 or 75, got {0}")]
    InvalidPercentile(u8),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Cumulative counters for one GIF.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GifCounters {
    pub bullish: u64,
    pub bearish: u64,
    pub appearances: u64,
}

impl GifCounters {
    pub fn declarations(&self) -> u64 {
        self.bullish + self.bearish
    }

    /// Net bullish share of appearances.
    pub fn valence(&self) -> f64 {
        (self.bullish as f64 - self.bearish as f64) / self.appearances as f64
    }

    fn add(&mut self, other: &GifCounters) {
        self.bullish += other.bullish;
        self.bearish += other.bearish;
        self.appearances += other.appearances;
    }

    fn sub(&self, other: &GifCounters) -> GifCounters {
        GifCounters {
            bullish: self.bullish - other.bullish,
            bearish: self.bearish - other.bearish,
            appearances: self.appearances - other.appearances,
        }
    }
}

/// One trading day's per-GIF increments, kept for audit and for the
/// day-level weights of the aggregate index.
#[derive(Debug, Clone)]
pub struct DayDelta {
    pub day: NaiveDate,
    pub counts: BTreeMap<String, GifCounters>,
    /// Number of GIF-carrying posts that day (the literal Eq-denominator).
    pub gif_post_count: u64,
}

impl DayDelta {
    /// Count a batch of posts without touching any ledger.
    pub fn from_posts<P>(day: NaiveDate, posts: &[P]) -> Self
    where
        P: std::borrow::Borrow<PostRecord> + Sync,
    {
        accumulate_day(day, posts)
    }
}

/// Per-GIF cumulative bullish/bearish/appearance counters as of a day.
#[derive(Debug, Clone, Default)]
pub struct ValenceLedger {
    as_of: Option<NaiveDate>,
    cumulative: BTreeMap<String, GifCounters>,
    day_log: Vec<DayDelta>,
}

impl ValenceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn as_of(&self) -> Option<NaiveDate> {
        self.as_of
    }

    pub fn cumulative(&self) -> &BTreeMap<String, GifCounters> {
        &self.cumulative
    }

    pub fn day_log(&self) -> &[DayDelta] {
        &self.day_log
    }

    pub fn counters(&self, gif_id: &str) -> Option<&GifCounters> {
        self.cumulative.get(gif_id)
    }

    /// Fold one trading day of posts into the ledger.
    ///
    /// `day` must be strictly after the current as-of date; feeding a past
    /// or already-consumed day is an error. Days without posts may simply be
    /// skipped by the caller — the ledger does not require contiguity, only
    /// forward motion.
    pub fn advance<P>(&mut self, day: NaiveDate, posts: &[P]) -> Result<&DayDelta, LedgerError>
    where
        P: std::borrow::Borrow<PostRecord> + Sync,
    {
        if let Some(as_of) = self.as_of {
            if day <= as_of {
                return Err(LedgerError::OutOfOrder {
                    as_of: self.as_of,
                    day,
                });
            }
        }
        let delta = accumulate_day(day, posts);
        for (gif, inc) in &delta.counts {
            self.cumulative.entry(gif.clone()).or_default().add(inc);
        }
        self.as_of = Some(day);
        self.day_log.push(delta);
        Ok(self.day_log.last().expect("just pushed"))
    }

    /// Cumulative valence of a GIF, or None while it has fewer than
    /// `min_decl` declarations.
    pub fn valence(&self, gif_id: &str, min_decl: u64) -> Result<Option<f64>, LedgerError> {
        let c = self
            .cumulative
            .get(gif_id)
            .ok_or_else(|| LedgerError::UnknownGif(gif_id.to_string()))?;
        if c.declarations() >= min_decl {
            Ok(Some(c.valence()))
        } else {
            Ok(None)
        }
    }

    /// The cumulative-appearance value at the given percentile (50 or 75)
    /// across all GIFs in the ledger, linear interpolation.
    pub fn appearance_threshold(&self, pct: u8) -> Result<f64, LedgerError> {
        if pct != 50 && pct != 75 {
            return Err(LedgerError::InvalidPercentile(pct));
        }
        if self.cumulative.is_empty() {
            return Err(LedgerError::EmptyLedger);
        }
        let mut appearances: Vec<f64> = self
            .cumulative
            .values()
            .map(|c| c.appearances as f64)
            .collect();
        appearances.sort_by(|a, b| a.partial_cmp(b).expect("finite counts"));
        Ok(stats::percentile_interpolated(&appearances, pct as f64))
    }

    /// GIFs whose cumulative appearances strictly exceed the percentile
    /// threshold.
    pub fn appearance_filter(&self, pct: u8) -> Result<BTreeSet<String>, LedgerError> {
        let threshold = self.appearance_threshold(pct)?;
        Ok(self
            .cumulative
            .iter()
            .filter(|(_, c)| c.appearances as f64 > threshold)
            .map(|(g, _)| g.clone())
            .collect())
    }

    /// Cumulative counters as they stood *before* `delta` was applied.
    /// Used by the through-previous-day valuation mode.
    pub fn counters_before(&self, gif_id: &str, delta: &DayDelta) -> Option<GifCounters> {
        let now = self.cumulative.get(gif_id)?;
        match delta.counts.get(gif_id) {
            Some(inc) => {
                let before = now.sub(inc);
                (before.appearances > 0).then_some(before)
            }
            None => Some(*now),
        }
    }

    /// Snapshot: one line per GIF `gif_id,cum_bullish,cum_bearish,cum_appearance`,
    /// sorted by gif_id. Byte-stable for audit diffs.
    pub fn write_snapshot(&self, path: &Path) -> Result<(), LedgerError> {
        let mut out = String::new();
        for (gif, c) in &self.cumulative {
            out.push_str(&format!(
                "{gif},{},{},{}\n",
                c.bullish, c.bearish, c.appearances
            ));
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Count one day of posts. Within a post GIF ids are already deduplicated,
/// so each (post, gif) pair increments that GIF's appearance once, plus the
/// matching declaration counter when the post is declared. Pure summation,
/// so chunked parallel reduction returns the same totals as a serial pass.
fn accumulate_day<P>(day: NaiveDate, posts: &[P]) -> DayDelta
where
    P: std::borrow::Borrow<PostRecord> + Sync,
{
    const PAR_THRESHOLD: usize = 8_192;
    let fold = |counts: &mut BTreeMap<String, GifCounters>, gif_posts: &mut u64, post: &PostRecord| {
        if post.gif_ids.is_empty() {
            return;
        }
        *gif_posts += 1;
        for gif in &post.gif_ids {
            let c = counts.entry(gif.clone()).or_default();
            c.appearances += 1;
            match post.declaration {
                Declaration::Bullish => c.bullish += 1,
                Declaration::Bearish => c.bearish += 1,
                Declaration::None => {}
            }
        }
    };

    let (counts, gif_post_count) = if posts.len() >= PAR_THRESHOLD {
        posts
            .par_chunks(PAR_THRESHOLD)
            .map(|chunk| {
                let mut counts = BTreeMap::new();
                let mut gif_posts = 0u64;
                for post in chunk {
                    fold(&mut counts, &mut gif_posts, post.borrow());
                }
                (counts, gif_posts)
            })
            .reduce(
                || (BTreeMap::new(), 0),
                |(mut a, na), (b, nb)| {
                    for (gif, inc) in b {
                        a.entry(gif).or_default().add(&inc);
                    }
                    (a, na + nb)
                },
            )
    } else {
        let mut counts = BTreeMap::new();
        let mut gif_posts = 0u64;
        for post in posts {
            fold(&mut counts, &mut gif_posts, post.borrow());
        }
        (counts, gif_posts)
    };

    DayDelta {
        day,
        counts,
        gif_post_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn post(id: &str, gifs: &[&str], decl: Declaration) -> PostRecord {
        PostRecord {
            post_id: id.into(),
            timestamp: Utc.with_ymd_and_hms(2021, 3, 2, 12, 0, 0).unwrap(),
            user_id: "u".into(),
            body: String::new(),
            cashtags: vec!["SPY".into()],
            gif_ids: gifs.iter().map(|s| s.to_string()).collect(),
            declaration: decl,
            text_score: None,
        }
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, day).unwrap()
    }

    #[test]
    fn bullish_post_increments_bullish_and_appearance() {
        let mut ledger = ValenceLedger::new();
        ledger
            .advance(d(1), &[post("1", &["g"], Declaration::Bullish)])
            .unwrap();
        let c = ledger.counters("g").unwrap();
        assert_eq!((c.bullish, c.bearish, c.appearances), (1, 0, 1));
    }

    #[test]
    fn undeclared_multi_gif_post_only_adds_appearances() {
        let mut ledger = ValenceLedger::new();
        ledger
            .advance(d(1), &[post("1", &["g", "h"], Declaration::None)])
            .unwrap();
        for gif in ["g", "h"] {
            let c = ledger.counters(gif).unwrap();
            assert_eq!((c.bullish, c.bearish, c.appearances), (0, 0, 1));
        }
    }

    #[test]
    fn feeding_a_past_day_is_out_of_order() {
        let mut ledger = ValenceLedger::new();
        ledger.advance(d(2), &[]).unwrap();
        assert!(matches!(
            ledger.advance(d(1), &[]),
            Err(LedgerError::OutOfOrder { .. })
        ));
        assert!(matches!(
            ledger.advance(d(2), &[]),
            Err(LedgerError::OutOfOrder { .. })
        ));
    }

    #[test]
    fn valence_formula_and_eligibility_threshold() {
        let mut ledger = ValenceLedger::new();
        let mut posts = Vec::new();
        // B=3, b=1 declared; one more undeclared appearance -> A=5.
        for i in 0..3 {
            posts.push(post(&format!("b{i}"), &["g"], Declaration::Bullish));
        }
        posts.push(post("s", &["g"], Declaration::Bearish));
        posts.push(post("n", &["g"], Declaration::None));
        ledger.advance(d(1), &posts).unwrap();
        // 4 declarations < 5 -> ineligible.
        assert_eq!(ledger.valence("g", 5).unwrap(), None);
        // (3-1)/5 = 0.4 at threshold 4.
        assert_eq!(ledger.valence("g", 4).unwrap(), Some(0.4));
        assert!(matches!(
            ledger.valence("zzz", 5),
            Err(LedgerError::UnknownGif(_))
        ));
    }

    #[test]
    fn all_bullish_gif_attains_upper_bound() {
        let mut ledger = ValenceLedger::new();
        let posts: Vec<_> = (0..5)
            .map(|i| post(&format!("p{i}"), &["g"], Declaration::Bullish))
            .collect();
        ledger.advance(d(1), &posts).unwrap();
        assert_eq!(ledger.valence("g", 5).unwrap(), Some(1.0));
    }

    #[test]
    fn counters_never_decrease_and_respect_bound() {
        let mut ledger = ValenceLedger::new();
        let mut last = BTreeMap::new();
        for day in 1..=5 {
            let posts: Vec<_> = (0..day)
                .map(|i| {
                    let decl = match i % 3 {
                        0 => Declaration::Bullish,
                        1 => Declaration::Bearish,
                        _ => Declaration::None,
                    };
                    post(&format!("{day}-{i}"), &["g", "h"], decl)
                })
                .collect();
            ledger.advance(d(day), &posts).unwrap();
            for (gif, c) in ledger.cumulative() {
                assert!(c.declarations() <= c.appearances);
                if let Some(prev) = last.get(gif.as_str()) {
                    let prev: &GifCounters = prev;
                    assert!(c.bullish >= prev.bullish);
                    assert!(c.bearish >= prev.bearish);
                    assert!(c.appearances >= prev.appearances);
                }
            }
            last = ledger
                .cumulative()
                .iter()
                .map(|(k, v)| (k.clone(), *v))
                .collect();
        }
    }

    #[test]
    fn appearance_filter_uses_strict_inequality() {
        let mut ledger = ValenceLedger::new();
        // 100 GIFs with appearances 1..=100.
        let mut posts = Vec::new();
        for g in 1..=100u32 {
            for k in 0..g {
                posts.push(post(&format!("{g}-{k}"), &[&format!("g{g:03}")], Declaration::None));
            }
        }
        ledger.advance(d(1), &posts).unwrap();
        // Interpolated 50th percentile of 1..=100 is 50.5.
        assert_eq!(ledger.appearance_threshold(50).unwrap(), 50.5);
        let kept = ledger.appearance_filter(50).unwrap();
        assert_eq!(kept.len(), 50);
        assert!(kept.contains("g051"));
        assert!(!kept.contains("g050"));
    }

    #[test]
    fn equal_appearances_filter_is_empty() {
        let mut ledger = ValenceLedger::new();
        let posts: Vec<_> = (0..10)
            .map(|i| post(&format!("p{i}"), &[&format!("g{i}")], Declaration::None))
            .collect();
        ledger.advance(d(1), &posts).unwrap();
        assert!(ledger.appearance_filter(75).unwrap().is_empty());
    }

    #[test]
    fn invalid_percentile_and_empty_ledger_error() {
        let ledger = ValenceLedger::new();
        assert!(matches!(
            ledger.appearance_filter(50),
            Err(LedgerError::EmptyLedger)
        ));
        let mut ledger = ValenceLedger::new();
        ledger
            .advance(d(1), &[post("1", &["g"], Declaration::None)])
            .unwrap();
        assert!(matches!(
            ledger.appearance_filter(60),
            Err(LedgerError::InvalidPercentile(60))
        ));
    }

    #[test]
    fn snapshot_is_sorted_and_stable() {
        let mut ledger = ValenceLedger::new();
        ledger
            .advance(
                d(1),
                &[
                    post("1", &["zeta"], Declaration::Bullish),
                    post("2", &["alpha"], Declaration::Bearish),
                ],
            )
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        ledger.write_snapshot(&p1).unwrap();
        ledger.write_snapshot(&p2).unwrap();
        let s1 = std::fs::read_to_string(&p1).unwrap();
        assert_eq!(s1, std::fs::read_to_string(&p2).unwrap());
        assert_eq!(s1, "alpha,0,1,1\nzeta,1,0,1\n");
    }
}
