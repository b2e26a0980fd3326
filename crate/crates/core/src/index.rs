//! Sentiment index construction on top of the valence ledger.
//!
//! Daily values for day `t` use ledger counters through end of day `t`
//! (configurable to through `t-1`); intraday values always price a bucket's
//! posts with the ledger as of the previous trading day's close, so no
//! 30-minute value can see a same-day declaration.
//!
//! The aggregate's denominator defaults to the total daily appearances of
//! *eligible* GIFs, which makes the daily weights convex. A strict-literal
//! mode (denominator = GIF-post count) is available for comparison; its
//! weights need not sum to one when posts carry multiple or ineligible GIFs.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::calendar::{CalendarError, TradingCalendar};
use crate::ledger::{DayDelta, GifCounters, LedgerError, ValenceLedger};
use crate::post::{Declaration, PostRecord};
use crate::series::{Flavor, Frequency, SentimentSeries, SeriesError, SeriesKey};
use crate::stats;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("no posts fall inside the calendar span")]
    EmptyCorpus,
    #[error("{0} is not a trading date in the calendar")]
    DayNotInCalendar(NaiveDate),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Denominator of the aggregate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenominatorMode {
    /// Total daily appearances of eligible GIFs; weights are convex.
    #[default]
    EligibleAppearances,
    /// Literal GIF-post count.
    GifPostCount,
}

/// Which counters value a GIF on day `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Cumulative counts through end of day `t` (inclusive).
    #[default]
    ThroughDay,
    /// Cumulative counts through end of day `t-1`.
    ThroughPrevDay,
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    /// Minimum bullish+bearish declarations before a GIF's valence counts.
    pub min_decl: u64,
    pub denominator: DenominatorMode,
    pub window: WindowMode,
    /// Optional appearance-percentile filter (50 or 75).
    pub appearance_pct: Option<u8>,
    /// Include posts without cashtags (default: excluded, they are flagged
    /// as non-market at parse time).
    pub include_nonmarket: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            min_decl: 5,
            denominator: DenominatorMode::default(),
            window: WindowMode::default(),
            appearance_pct: None,
            include_nonmarket: false,
        }
    }
}

/// The daily series bundle produced by [`build_index`].
#[derive(Debug, Clone)]
pub struct DailySeriesSet {
    pub gif: SentimentSeries,
    pub pos: SentimentSeries,
    pub neg: SentimentSeries,
    pub selfdec: SentimentSeries,
    pub text: SentimentSeries,
}

/// 30-minute bucket series (only slots containing posts carry keys).
#[derive(Debug, Clone)]
pub struct IntradaySeriesSet {
    pub gif: SentimentSeries,
    pub selfdec: SentimentSeries,
    pub text: SentimentSeries,
    pub disagreement: SentimentSeries,
}

#[derive(Debug)]
pub struct IndexOutput {
    pub ledger: ValenceLedger,
    pub daily: DailySeriesSet,
    pub intraday: Option<IntradaySeriesSet>,
    /// Total posts assigned to each trading day (before the market filter);
    /// feeds the abnormal-message-count control.
    pub daily_post_counts: Vec<(NaiveDate, u64)>,
}

/// Valence of one GIF under the day's effective counters, or None when the
/// GIF is ineligible (below the declaration threshold, filtered out by the
/// appearance percentile, or unseen under the chosen window).
fn effective_valence(
    ledger: &ValenceLedger,
    delta: &DayDelta,
    gif: &str,
    opts: &IndexOptions,
    appearance_threshold: Option<f64>,
) -> Option<f64> {
    let counters = match opts.window {
        WindowMode::ThroughDay => ledger.counters(gif).copied(),
        WindowMode::ThroughPrevDay => ledger.counters_before(gif, delta),
    }?;
    eligible_valence(&counters, opts.min_decl, appearance_threshold)
}

fn eligible_valence(
    counters: &GifCounters,
    min_decl: u64,
    appearance_threshold: Option<f64>,
) -> Option<f64> {
    if let Some(thr) = appearance_threshold {
        if counters.appearances as f64 <= thr {
            return None;
        }
    }
    (counters.declarations() >= min_decl).then(|| counters.valence())
}

/// Appearance-percentile threshold under the day's effective window, if the
/// filter is enabled.
fn day_appearance_threshold(
    ledger: &ValenceLedger,
    delta: &DayDelta,
    opts: &IndexOptions,
) -> Result<Option<f64>, LedgerError> {
    let Some(pct) = opts.appearance_pct else {
        return Ok(None);
    };
    match opts.window {
        WindowMode::ThroughDay => ledger.appearance_threshold(pct).map(Some),
        WindowMode::ThroughPrevDay => {
            if pct != 50 && pct != 75 {
                return Err(LedgerError::InvalidPercentile(pct));
            }
            let mut appearances: Vec<f64> = ledger
                .cumulative()
                .keys()
                .filter_map(|gif| ledger.counters_before(gif, delta))
                .map(|c| c.appearances as f64)
                .collect();
            if appearances.is_empty() {
                return Err(LedgerError::EmptyLedger);
            }
            appearances.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            Ok(Some(stats::percentile_interpolated(&appearances, pct as f64)))
        }
    }
}

/// Appearance-weighted aggregate over GIFs with valences passing `keep`.
fn weighted_aggregate(
    delta: &DayDelta,
    opts: &IndexOptions,
    valence_of: impl Fn(&str) -> Option<f64>,
    keep: impl Fn(f64) -> bool,
) -> Option<f64> {
    let mut numerator = 0.0;
    let mut eligible_appearances = 0.0;
    let mut any = false;
    for (gif, counts) in &delta.counts {
        let Some(v) = valence_of(gif) else { continue };
        if !keep(v) {
            continue;
        }
        let w = counts.appearances as f64;
        numerator += w * v;
        eligible_appearances += w;
        any = true;
    }
    if !any {
        return None;
    }
    let denominator = match opts.denominator {
        DenominatorMode::EligibleAppearances => eligible_appearances,
        DenominatorMode::GifPostCount => delta.gif_post_count as f64,
    };
    (denominator > 0.0).then(|| numerator / denominator)
}

/// Aggregate daily GIF sentiment: the appearance-weighted average valence of
/// eligible GIFs appearing that day. None when no eligible GIF appeared.
///
/// `ledger` must already be advanced through the delta's day.
pub fn aggregate_gif_sentiment(
    ledger: &ValenceLedger,
    delta: &DayDelta,
    opts: &IndexOptions,
) -> Result<Option<f64>, IndexError> {
    let threshold = day_appearance_threshold(ledger, delta, opts)?;
    Ok(weighted_aggregate(
        delta,
        opts,
        |gif| effective_valence(ledger, delta, gif, opts, threshold),
        |_| true,
    ))
}

/// Positive/negative split: the aggregate restricted to eligible GIFs with
/// strictly positive (resp. strictly negative) valence. Zero-valence GIFs
/// enter neither side. Each side is None when its GIF set is empty.
pub fn split_signed(
    ledger: &ValenceLedger,
    delta: &DayDelta,
    opts: &IndexOptions,
) -> Result<(Option<f64>, Option<f64>), IndexError> {
    let threshold = day_appearance_threshold(ledger, delta, opts)?;
    let valence = |gif: &str| effective_valence(ledger, delta, gif, opts, threshold);
    let pos = weighted_aggregate(delta, opts, valence, |v| v > 0.0);
    let neg = weighted_aggregate(delta, opts, valence, |v| v < 0.0);
    Ok((pos, neg))
}

/// Net bullish declaration share among posts without GIFs:
/// (bullish - bearish) / all non-GIF posts. None if no non-GIF post.
pub fn selfdec<P: std::borrow::Borrow<PostRecord>>(day_posts: &[P]) -> Option<f64> {
    let mut bullish = 0i64;
    let mut bearish = 0i64;
    let mut total = 0i64;
    for post in day_posts {
        let post = post.borrow();
        if post.has_gif() {
            continue;
        }
        total += 1;
        match post.declaration {
            Declaration::Bullish => bullish += 1,
            Declaration::Bearish => bearish += 1,
            Declaration::None => {}
        }
    }
    (total > 0).then(|| (bullish - bearish) as f64 / total as f64)
}

/// Arithmetic mean of the externally supplied per-post text scores.
pub fn text_daily_average<P: std::borrow::Borrow<PostRecord>>(day_posts: &[P]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for post in day_posts {
        if let Some(score) = post.borrow().text_score {
            sum += score;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Dispersion of post-level GIF valences within a bucket: for each
/// GIF-carrying post, the mean valence of its eligible GIFs; then the sample
/// standard deviation across contributing posts. None with < 2 contributors.
///
/// `valence_of` should price GIFs with the previous trading day's ledger.
pub fn disagreement(
    bucket_posts: &[&PostRecord],
    valence_of: impl Fn(&str) -> Option<f64>,
) -> Option<f64> {
    let mut post_valences = Vec::new();
    for post in bucket_posts {
        if post.gif_ids.is_empty() {
            continue;
        }
        let vs: Vec<f64> = post.gif_ids.iter().filter_map(|g| valence_of(g)).collect();
        if !vs.is_empty() {
            post_valences.push(stats::mean(&vs));
        }
    }
    (post_valences.len() >= 2).then(|| stats::sample_sd(&post_valences))
}

/// Lag-1 autocorrelation summary of day-level GIF valences.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrReport {
    pub min_appearance: u64,
    /// GIFs with >= 3 qualifying days and a defined autocorrelation.
    pub gif_count: usize,
    pub mean: f64,
    pub sd: f64,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

/// Per-GIF lag-1 autocorrelation of day-level (not cumulative) valences,
/// over days where the GIF's daily appearances meet the threshold.
/// Constant series have undefined autocorrelation and are excluded.
pub fn gif_autocorrelation_report(day_log: &[DayDelta], min_appearance: u64) -> AutocorrReport {
    let mut per_gif: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for delta in day_log {
        for (gif, c) in &delta.counts {
            if c.appearances >= min_appearance {
                per_gif.entry(gif).or_default().push(c.valence());
            }
        }
    }
    let mut rhos: Vec<f64> = per_gif
        .values()
        .filter(|vs| vs.len() >= 3)
        .filter_map(|vs| stats::lag1_autocorrelation(vs))
        .collect();
    rhos.sort_by(|a, b| a.partial_cmp(b).expect("finite autocorrelation"));
    let pct = |p: f64| stats::percentile_interpolated(&rhos, p);
    AutocorrReport {
        min_appearance,
        gif_count: rhos.len(),
        mean: stats::mean(&rhos),
        sd: stats::sample_sd(&rhos),
        p10: pct(10.0),
        p25: pct(25.0),
        p50: pct(50.0),
        p75: pct(75.0),
        p90: pct(90.0),
    }
}

/// Group posts by trading day, preserving input order within each day.
pub fn group_by_trading_day<'a>(
    posts: &'a [PostRecord],
    cal: &TradingCalendar,
) -> Result<BTreeMap<NaiveDate, Vec<&'a PostRecord>>, IndexError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<&PostRecord>> = BTreeMap::new();
    for post in posts {
        let day = cal.assign_trading_day(post.timestamp)?;
        by_day.entry(day).or_default().push(post);
    }
    Ok(by_day)
}

/// Incremental index construction: feed trading days in order, then
/// [`IndexAccumulator::finish`]. Streaming avoids materializing a whole
/// corpus when days can be produced one at a time.
pub struct IndexAccumulator<'a> {
    cal: &'a TradingCalendar,
    opts: IndexOptions,
    with_intraday: bool,
    ledger: ValenceLedger,
    gif_pts: Vec<(SeriesKey, Option<f64>)>,
    pos_pts: Vec<(SeriesKey, Option<f64>)>,
    neg_pts: Vec<(SeriesKey, Option<f64>)>,
    selfdec_pts: Vec<(SeriesKey, Option<f64>)>,
    text_pts: Vec<(SeriesKey, Option<f64>)>,
    intraday_gif: Vec<(SeriesKey, Option<f64>)>,
    intraday_selfdec: Vec<(SeriesKey, Option<f64>)>,
    intraday_text: Vec<(SeriesKey, Option<f64>)>,
    intraday_disagreement: Vec<(SeriesKey, Option<f64>)>,
    post_counts: Vec<(NaiveDate, u64)>,
}

impl<'a> IndexAccumulator<'a> {
    pub fn new(cal: &'a TradingCalendar, opts: IndexOptions, with_intraday: bool) -> Self {
        Self {
            cal,
            opts,
            with_intraday,
            ledger: ValenceLedger::new(),
            gif_pts: Vec::new(),
            pos_pts: Vec::new(),
            neg_pts: Vec::new(),
            selfdec_pts: Vec::new(),
            text_pts: Vec::new(),
            intraday_gif: Vec::new(),
            intraday_selfdec: Vec::new(),
            intraday_text: Vec::new(),
            intraday_disagreement: Vec::new(),
            post_counts: Vec::new(),
        }
    }

    /// Feed one trading day. Every post must belong to `day`; calendar days
    /// skipped between calls become missing points. Days must arrive in
    /// strictly increasing order (the ledger enforces this).
    pub fn push_day(&mut self, day: NaiveDate, posts: &[&PostRecord]) -> Result<(), IndexError> {
        let day_pos = self
            .cal
            .position(day)
            .ok_or(IndexError::DayNotInCalendar(day))?;
        // Backfill skipped calendar days with empty entries so series keys
        // stay dense over the span.
        if let Some(prev) = self.ledger.as_of() {
            let prev_pos = self.cal.position(prev).expect("ledger day in calendar");
            for pos in prev_pos + 1..day_pos {
                let empty_day = self.cal.days()[pos];
                self.ingest(empty_day, &[])?;
            }
        }
        self.ingest(day, posts)
    }

    fn ingest(&mut self, day: NaiveDate, all_day_posts: &[&PostRecord]) -> Result<(), IndexError> {
        let opts = &self.opts;
        self.post_counts.push((day, all_day_posts.len() as u64));
        let day_posts: Vec<&PostRecord> = all_day_posts
            .iter()
            .copied()
            .filter(|p| opts.include_nonmarket || p.is_market_post())
            .collect();

        // Intraday values are priced before today's declarations reach the
        // ledger: strictly previous-close information.
        if self.with_intraday && !day_posts.is_empty() {
            let ledger = &self.ledger;
            let threshold = match opts.appearance_pct {
                Some(pct) if !ledger.cumulative().is_empty() => {
                    Some(ledger.appearance_threshold(pct)?)
                }
                _ => None,
            };
            let prev_valence = |gif: &str| {
                ledger
                    .counters(gif)
                    .and_then(|c| eligible_valence(c, opts.min_decl, threshold))
            };
            let mut by_slot: BTreeMap<u8, Vec<&PostRecord>> = BTreeMap::new();
            for post in &day_posts {
                let bucket = self.cal.assign_bucket(post.timestamp)?;
                debug_assert_eq!(bucket.trading_day, day);
                by_slot.entry(bucket.slot).or_default().push(post);
            }
            for (slot, slot_posts) in by_slot {
                let key = SeriesKey::Slot(day, slot);
                let slot_delta = DayDelta::from_posts(day, &slot_posts);
                let gif_value = weighted_aggregate(&slot_delta, opts, &prev_valence, |_| true);
                self.intraday_gif.push((key, gif_value));
                self.intraday_selfdec.push((key, selfdec(&slot_posts)));
                self.intraday_text.push((key, text_daily_average(&slot_posts)));
                self.intraday_disagreement
                    .push((key, disagreement(&slot_posts, &prev_valence)));
            }
        }

        let delta = self.ledger.advance(day, &day_posts)?.clone();

        let key = SeriesKey::Day(day);
        let gif_value = aggregate_gif_sentiment(&self.ledger, &delta, opts)?;
        let (pos, neg) = split_signed(&self.ledger, &delta, opts)?;
        self.gif_pts.push((key, gif_value));
        self.pos_pts.push((key, pos));
        self.neg_pts.push((key, neg));
        self.selfdec_pts.push((key, selfdec(&day_posts)));
        self.text_pts.push((key, text_daily_average(&day_posts)));
        Ok(())
    }

    pub fn finish(self) -> Result<IndexOutput, IndexError> {
        if self.post_counts.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let daily = DailySeriesSet {
            gif: SentimentSeries::new(Flavor::Gif, Frequency::Daily, self.gif_pts)?,
            pos: SentimentSeries::new(Flavor::Pos, Frequency::Daily, self.pos_pts)?,
            neg: SentimentSeries::new(Flavor::Neg, Frequency::Daily, self.neg_pts)?,
            selfdec: SentimentSeries::new(Flavor::SelfDec, Frequency::Daily, self.selfdec_pts)?,
            text: SentimentSeries::new(Flavor::Text, Frequency::Daily, self.text_pts)?,
        };
        let intraday = if self.with_intraday {
            Some(IntradaySeriesSet {
                gif: SentimentSeries::new(Flavor::Gif, Frequency::Bucket, self.intraday_gif)?,
                selfdec: SentimentSeries::new(
                    Flavor::SelfDec,
                    Frequency::Bucket,
                    self.intraday_selfdec,
                )?,
                text: SentimentSeries::new(Flavor::Text, Frequency::Bucket, self.intraday_text)?,
                disagreement: SentimentSeries::new(
                    Flavor::Disagreement,
                    Frequency::Bucket,
                    self.intraday_disagreement,
                )?,
            })
        } else {
            None
        };

        Ok(IndexOutput {
            ledger: self.ledger,
            daily,
            intraday,
            daily_post_counts: self.post_counts,
        })
    }
}

/// Build the full set of sentiment series from a post corpus.
///
/// Advances the ledger one trading day at a time over the span between the
/// first and last post; days without posts become missing points. With
/// `with_intraday`, bucket-level GIF/SELFDEC/TEXT/DISAGREEMENT series are
/// produced using the previous day's ledger state.
pub fn build_index(
    posts: &[PostRecord],
    cal: &TradingCalendar,
    opts: &IndexOptions,
    with_intraday: bool,
) -> Result<IndexOutput, IndexError> {
    let by_day = group_by_trading_day(posts, cal)?;
    if by_day.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut acc = IndexAccumulator::new(cal, opts.clone(), with_intraday);
    for (day, day_posts) in &by_day {
        acc.push_day(*day, day_posts)?;
    }
    acc.finish()
}
