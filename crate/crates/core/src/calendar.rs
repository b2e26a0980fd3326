//! Trading calendar: session cutoff and 30-minute bucket assignment.
//!
//! A trading day `t` owns the window `[cutoff on the previous session,
//! cutoff on day t)` in exchange-local time (default 16:00 US-Eastern).
//! Posts on non-trading days roll forward to the next trading date. The
//! same window is partitioned into 48 half-hour slots by wall-clock time of
//! day, so every instant in the calendar span maps to exactly one
//! `(trading day, slot)` pair and the bucket's day always agrees with
//! `assign_trading_day`.
//!
//! The boundary instant itself (exactly 16:00:00) belongs to the *next*
//! session: slots are half-open `[start, end)` and the day window follows
//! the same convention so the two assignments never disagree.

use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use thiserror::Error;

/// Number of 30-minute slots in the 24-hour trading-day window.
pub const SLOTS_PER_DAY: u8 = 48;

#[derive(Debug, Error)]
pub enum CalendarError {
    #[error("calendar has no trading dates")]
    Empty,
    #[error("trading dates must be strictly increasing (at {0})")]
    NonMonotonicDates(NaiveDate),
    #[error("timestamp {0} is outside the calendar span")]
    OutOfCalendar(DateTime<Utc>),
    #[error("unknown time zone {0:?}")]
    UnknownZone(String),
    #[error("cannot parse trading date {0:?}")]
    BadDate(String),
    #[error("failed to read calendar file: {0}")]
    Io(#[from] std::io::Error),
}

/// Half-hour bucket within a trading-day window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bucket {
    pub trading_day: NaiveDate,
    /// Slot index in `0..48`; slot 0 starts at the cutoff time of the
    /// previous session (16:00 by default).
    pub slot: u8,
}

/// Ordered trading dates plus the session cutoff rule.
#[derive(Debug, Clone)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
    positions: HashMap<NaiveDate, usize>,
    cutoff: NaiveTime,
    zone: Tz,
}

impl TradingCalendar {
    pub const DEFAULT_CUTOFF: NaiveTime = match NaiveTime::from_hms_opt(16, 0, 0) {
        Some(t) => t,
        None => unreachable!(),
    };

    pub fn new(days: Vec<NaiveDate>, cutoff: NaiveTime, zone: Tz) -> Result<Self, CalendarError> {
        if days.is_empty() {
            return Err(CalendarError::Empty);
        }
        for pair in days.windows(2) {
            if pair[1] <= pair[0] {
                return Err(CalendarError::NonMonotonicDates(pair[1]));
            }
        }
        let positions = days.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        Ok(Self {
            days,
            positions,
            cutoff,
            zone,
        })
    }

    /// Weekday calendar (Mon-Fri, no holidays) with default cutoff and zone.
    pub fn weekdays(start: NaiveDate, n_days: usize) -> Self {
        let mut days = Vec::with_capacity(n_days);
        let mut d = start;
        while days.len() < n_days {
            if d.weekday().number_from_monday() <= 5 {
                days.push(d);
            }
            d = d.succ_opt().expect("date overflow");
        }
        Self::new(days, Self::DEFAULT_CUTOFF, chrono_tz::America::New_York)
            .expect("weekday calendar is valid")
    }

    /// Read trading dates from a text file: one ISO date per line, `#`
    /// comments and an optional `date` header allowed.
    pub fn from_file(path: &Path, cutoff: NaiveTime, zone: Tz) -> Result<Self, CalendarError> {
        let text = std::fs::read_to_string(path)?;
        let mut days = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("date") {
                continue;
            }
            let d = NaiveDate::parse_from_str(line, "%Y-%m-%d")
                .map_err(|_| CalendarError::BadDate(line.to_string()))?;
            days.push(d);
        }
        Self::new(days, cutoff, zone)
    }

    pub fn zone_from_name(name: &str) -> Result<Tz, CalendarError> {
        name.parse::<Tz>()
            .map_err(|_| CalendarError::UnknownZone(name.to_string()))
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn first_day(&self) -> NaiveDate {
        self.days[0]
    }

    pub fn last_day(&self) -> NaiveDate {
        *self.days.last().expect("non-empty")
    }

    pub fn cutoff(&self) -> NaiveTime {
        self.cutoff
    }

    pub fn zone(&self) -> Tz {
        self.zone
    }

    /// Position of a trading date within the calendar.
    pub fn position(&self, day: NaiveDate) -> Option<usize> {
        self.positions.get(&day).copied()
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.positions.contains_key(&day)
    }

    /// The cutoff instant that *closes* the window of `day` (exclusive).
    pub fn session_close(&self, day: NaiveDate) -> DateTime<Utc> {
        self.local_cutoff_instant(day)
    }

    /// The instant that *opens* the window of the trading day at `pos`:
    /// the cutoff of the previous trading date, or of the previous calendar
    /// day for the first entry.
    pub fn session_open(&self, pos: usize) -> DateTime<Utc> {
        let prev = if pos == 0 {
            self.days[0].pred_opt().expect("date underflow")
        } else {
            self.days[pos - 1]
        };
        self.local_cutoff_instant(prev)
    }

    fn local_cutoff_instant(&self, date: NaiveDate) -> DateTime<Utc> {
        let naive = date.and_time(self.cutoff);
        // The cutoff never lands inside a US DST transition (those happen at
        // 02:00 local); take the earliest interpretation for other zones.
        match self.zone.from_local_datetime(&naive) {
            chrono::LocalResult::Single(dt) => dt.with_timezone(&Utc),
            chrono::LocalResult::Ambiguous(a, _) => a.with_timezone(&Utc),
            chrono::LocalResult::None => {
                let shifted = naive + Duration::hours(1);
                self.zone
                    .from_local_datetime(&shifted)
                    .earliest()
                    .expect("shifted local time resolves")
                    .with_timezone(&Utc)
            }
        }
    }

    /// Map an instant to its trading date.
    ///
    /// The window of day `t` is `[prev-session cutoff, day-t cutoff)`;
    /// weekend and holiday instants roll forward to the next trading date.
    pub fn assign_trading_day(&self, ts: DateTime<Utc>) -> Result<NaiveDate, CalendarError> {
        let local = ts.with_timezone(&self.zone);
        let mut effective = local.date_naive();
        if local.time() >= self.cutoff {
            effective = effective.succ_opt().expect("date overflow");
        }
        // First trading date on or after the effective date.
        let idx = self.days.partition_point(|&d| d < effective);
        if idx >= self.days.len() {
            return Err(CalendarError::OutOfCalendar(ts));
        }
        if ts < self.session_open(idx) {
            return Err(CalendarError::OutOfCalendar(ts));
        }
        Ok(self.days[idx])
    }

    /// Map an instant to its `(trading day, half-hour slot)` bucket.
    ///
    /// Slots are keyed by wall-clock time of day relative to the cutoff, so
    /// slot 0 covers `[16:00, 16:30)` of the previous evening and slot 47
    /// covers `[15:30, 16:00)` on the trading date itself.
    pub fn assign_bucket(&self, ts: DateTime<Utc>) -> Result<Bucket, CalendarError> {
        let trading_day = self.assign_trading_day(ts)?;
        let local = ts.with_timezone(&self.zone);
        let tod = local.time().num_seconds_from_midnight() as i64;
        let cutoff = self.cutoff.num_seconds_from_midnight() as i64;
        let since_cutoff = (tod - cutoff).rem_euclid(86_400);
        let slot = (since_cutoff / 1_800) as u8;
        debug_assert!(slot < SLOTS_PER_DAY);
        Ok(Bucket { trading_day, slot })
    }

    /// Slot index of an exchange-local time of day (same rule as
    /// [`assign_bucket`], without the calendar lookup).
    pub fn slot_of_time(&self, time: NaiveTime) -> u8 {
        let tod = time.num_seconds_from_midnight() as i64;
        let cutoff = self.cutoff.num_seconds_from_midnight() as i64;
        ((tod - cutoff).rem_euclid(86_400) / 1_800) as u8
    }
}
