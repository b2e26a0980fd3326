//! Seeded synthetic world: posts, GIF catalog, market series, and controls
//! with planted sentiment dynamics.
//!
//! A latent AR(1) mood `S_t` drives everything: GIF choice is tilted toward
//! GIFs whose fixed valence agrees with the day's mood, declarations follow
//! a logistic link in (valence + mood), and daily returns carry a planted
//! contemporaneous effect plus a distributed-lag reversal over 20 days.
//! Controls are generated independent of the mood by default so planted
//! effects are identified; a confounded mode adds mood leakage for stress
//! testing. Everything derives from per-day counter seeds, so output is
//! identical regardless of scheduling.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::TradingCalendar;
use crate::metrics::BucketRow;
use crate::post::{Declaration, PostRecord};
use crate::seeding::{self, stream};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    /// Trading days to generate.
    pub days: usize,
    /// Mean posts per day (Poisson).
    pub posts_per_day: f64,
    pub gif_catalog_size: usize,
    /// Latent mood AR(1) persistence, in [0, 1).
    pub rho: f64,
    /// Innovation standard deviation of the latent mood.
    pub innovation_sd: f64,
    /// Declaration link slope `a` in logistic(a * (valence + mood)).
    pub declaration_slope: f64,
    /// Planted same-day return effect, percent per latent standard deviation.
    pub beta_contemporaneous: f64,
    /// Planted total reversal over the following 20 days, percent per
    /// latent standard deviation.
    pub beta_reversal: f64,
    /// Return noise standard deviation, percent.
    pub return_noise_sd: f64,
    pub seed: u64,
    /// Share of posts that carry a GIF.
    pub gif_post_share: f64,
    /// Share of posts carrying an explicit bullish/bearish declaration.
    pub declaration_rate: f64,
    /// Strength of the mood tilt in GIF selection.
    pub gif_tilt: f64,
    /// Share of posts without any cashtag (exercises the non-market flag).
    pub nonmarket_share: f64,
    /// First trading day.
    pub start: NaiveDate,
    /// Generate 30-minute market buckets (returns and volume).
    pub intraday: bool,
    /// Number of firms in the daily firm panel (0 = no panel).
    pub firm_count: usize,
    /// Leak the latent mood into the control columns.
    pub confounded_controls: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let rho: f64 = 0.5;
        Self {
            days: 250,
            posts_per_day: 500.0,
            gif_catalog_size: 400,
            rho,
            // Unit stationary variance by default.
            innovation_sd: (1.0 - rho * rho).sqrt(),
            declaration_slope: 2.0,
            beta_contemporaneous: 0.3,
            beta_reversal: 1.2,
            return_noise_sd: 1.0,
            seed: 42,
            gif_post_share: 0.45,
            declaration_rate: 0.6,
            gif_tilt: 1.0,
            nonmarket_share: 0.02,
            start: NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date"),
            intraday: true,
            firm_count: 0,
            confounded_controls: false,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.days == 0 {
            return bad("days must be >= 1");
        }
        if !(self.posts_per_day >= 1.0) {
            return bad("posts_per_day must be >= 1");
        }
        if self.gif_catalog_size == 0 {
            return bad("gif_catalog_size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if !(self.declaration_slope > 0.0) {
            return bad("declaration_slope must be > 0");
        }
        for (name, v) in [
            ("innovation_sd", self.innovation_sd),
            ("beta_contemporaneous", self.beta_contemporaneous),
            ("beta_reversal", self.beta_reversal),
            ("return_noise_sd", self.return_noise_sd),
        ] {
            if !v.is_finite() {
                return Err(SynthError::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.gif_post_share)
            || !(0.0..=1.0).contains(&self.declaration_rate)
            || !(0.0..=1.0).contains(&self.nonmarket_share)
        {
            return bad("shares must lie in [0, 1]");
        }
        Ok(())
    }

    /// Stationary standard deviation of the latent mood.
    pub fn latent_sd(&self) -> f64 {
        self.innovation_sd / (1.0 - self.rho * self.rho).sqrt()
    }
}

/// Ground truth saved next to the generated world.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldTruth {
    pub config: WorldConfig,
    /// Standardized latent mood per trading day.
    pub latent: Vec<(NaiveDate, f64)>,
    /// Fixed per-GIF valences.
    pub gif_valences: Vec<(String, f64)>,
}

#[derive(Debug)]
pub struct SyntheticWorld {
    pub calendar: TradingCalendar,
    pub posts: Vec<PostRecord>,
    /// Daily index return, percent.
    pub market: Vec<(NaiveDate, f64)>,
    pub buckets: Vec<BucketRow>,
    /// Daily control columns.
    pub controls: BTreeMap<String, Vec<(NaiveDate, f64)>>,
    /// Monthly control columns (one row per month).
    pub monthly_controls: BTreeMap<String, Vec<(NaiveDate, f64)>>,
    /// date -> (firm_id, ret_pct, mktcap, factor values)
    pub firm_panel: Vec<(NaiveDate, String, f64, f64, Vec<f64>)>,
    pub firm_factor_names: Vec<String>,
    pub truth: WorldTruth,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fixed per-GIF valences, Uniform(-0.9, 0.9).
fn gif_catalog(cfg: &WorldConfig) -> Vec<f64> {
    let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_CATALOG, 0);
    let dist = Uniform::new(-0.9, 0.9).expect("valid range");
    (0..cfg.gif_catalog_size).map(|_| dist.sample(&mut rng)).collect()
}

fn gif_id(j: usize) -> String {
    format!("gif{j:06}")
}

/// Standardized latent mood with a 20-day burn-in prefix: index 0..20 are
/// pre-sample lags, 20.. map onto trading days.
const LATENT_BURN_IN: usize = 20;

fn latent_path(cfg: &WorldConfig) -> Vec<f64> {
    let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_LATENT, 0);
    let gauss = Normal::new(0.0, cfg.innovation_sd).expect("valid sd");
    let n = cfg.days + LATENT_BURN_IN;
    let mut s = Vec::with_capacity(n);
    // Stationary start.
    let stationary = Normal::new(0.0, cfg.latent_sd()).expect("valid sd");
    s.push(stationary.sample(&mut rng));
    for _ in 1..n {
        let prev = *s.last().expect("non-empty");
        s.push(cfg.rho * prev + gauss.sample(&mut rng));
    }
    // Standardize by the stationary sd so planted betas read "per latent sd".
    let sd = cfg.latent_sd();
    s.iter().map(|v| v / sd).collect()
}

/// Generate the posts of one trading day.
///
/// `z` is the day's standardized mood. Deterministic per (seed, day index).
fn day_posts(
    cfg: &WorldConfig,
    cal: &TradingCalendar,
    valences: &[f64],
    day_index: usize,
    z: f64,
) -> Vec<PostRecord> {
    let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_DAY, day_index as u64);
    let day = cal.days()[day_index];
    let pos = cal.position(day).expect("generated day");
    let open = cal.session_open(pos).timestamp();
    let close = cal.session_close(day).timestamp();

    // Mood-tilted GIF choice: weight_j = exp(tilt * z * v_j); cumulative
    // weights allow O(log G) sampling per post.
    let mut cumulative = Vec::with_capacity(valences.len());
    let mut total = 0.0;
    for v in valences {
        total += (cfg.gif_tilt * z * v).exp();
        cumulative.push(total);
    }

    let n_posts = Poisson::new(cfg.posts_per_day).expect("valid mean").sample(&mut rng) as usize;
    let text_noise = Normal::new(0.0, 0.35).expect("valid sd");
    let mut posts = Vec::with_capacity(n_posts);
    for i in 0..n_posts {
        let ts_secs = rng.random_range(open..close);
        let timestamp: DateTime<Utc> =
            DateTime::from_timestamp(ts_secs, 0).expect("valid timestamp");

        let has_gif = rng.random::<f64>() < cfg.gif_post_share;
        let (gif, gif_valence) = if has_gif {
            let u = rng.random::<f64>() * total;
            let j = cumulative.partition_point(|&c| c < u).min(valences.len() - 1);
            (Some(gif_id(j)), valences[j])
        } else {
            (None, 0.0)
        };

        let declaration = if rng.random::<f64>() < cfg.declaration_rate {
            let drive = if has_gif { gif_valence + z } else { z };
            if rng.random::<f64>() < logistic(cfg.declaration_slope * drive) {
                Declaration::Bullish
            } else {
                Declaration::Bearish
            }
        } else {
            Declaration::None
        };

        let text_score = if rng.random::<f64>() < 0.8 {
            Some((0.25 * z + text_noise.sample(&mut rng)).clamp(-1.0, 1.0))
        } else {
            None
        };

        let market = rng.random::<f64>() >= cfg.nonmarket_share;
        let mut body = String::with_capacity(96);
        if market {
            body.push_str("$SPY ");
        }
        body.push_str("note ");
        body.push_str(&i.to_string());
        if let Some(g) = &gif {
            body.push_str(" https://media2.giphy.com/media/");
            body.push_str(g);
            body.push_str("/giphy.gif");
        }

        posts.push(PostRecord {
            post_id: format!("p{day_index:04}{i:06}"),
            timestamp,
            user_id: format!("u{:05}", rng.random_range(0..20_000)),
            body,
            cashtags: if market { vec!["SPY".into()] } else { Vec::new() },
            gif_ids: gif.map(|g| vec![g]).unwrap_or_default(),
            declaration,
            text_score,
        });
    }
    posts
}

/// Daily return with the planted contemporaneous effect and distributed-lag
/// reversal. `latent` includes the burn-in prefix; `t` is the trading-day
/// index.
fn planted_return(cfg: &WorldConfig, latent: &[f64], t: usize, noise: f64) -> f64 {
    let z = latent[LATENT_BURN_IN + t];
    let mut lag_sum = 0.0;
    for k in 1..=LATENT_BURN_IN {
        lag_sum += latent[LATENT_BURN_IN + t - k];
    }
    cfg.beta_contemporaneous * z - cfg.beta_reversal / 20.0 * lag_sum + noise
}

/// Generate the full world.
pub fn generate_world(cfg: &WorldConfig) -> Result<SyntheticWorld, SynthError> {
    cfg.validate()?;
    let calendar = TradingCalendar::weekdays(cfg.start, cfg.days);
    let valences = gif_catalog(cfg);
    let latent = latent_path(cfg);

    // Posts, parallel across days, deterministic merge.
    let day_batches: Vec<Vec<PostRecord>> = (0..cfg.days)
        .into_par_iter()
        .map(|t| day_posts(cfg, &calendar, &valences, t, latent[LATENT_BURN_IN + t]))
        .collect();
    let daily_totals: Vec<u64> = day_batches.iter().map(|b| b.len() as u64).collect();
    let mut posts: Vec<PostRecord> = day_batches.into_iter().flatten().collect();
    posts.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));

    // Market returns.
    let mut market_rng = seeding::unit_rng(cfg.seed, stream::SYNTH_MARKET, 0);
    let ret_noise = Normal::new(0.0, cfg.return_noise_sd).expect("valid sd");
    let market: Vec<(NaiveDate, f64)> = (0..cfg.days)
        .map(|t| {
            let noise = ret_noise.sample(&mut market_rng);
            (calendar.days()[t], planted_return(cfg, &latent, t, noise))
        })
        .collect();

    // Intraday buckets over the regular session (slots 35..=47 under the
    // 16:00 cutoff, i.e. [09:30, 16:00) wall clock).
    let mut buckets = Vec::new();
    if cfg.intraday {
        let slots: Vec<u8> = (35..=47).collect();
        let per_slot = slots.len() as f64;
        for t in 0..cfg.days {
            let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_MARKET, 1 + t as u64);
            let z = latent[LATENT_BURN_IN + t];
            let day_ret = market[t].1;
            let vol_noise = Normal::new(0.0, 0.3).expect("valid sd");
            for &slot in &slots {
                let volume =
                    (14.0 + 0.2 * z.abs() + vol_noise.sample(&mut rng)).exp().round();
                let ret_pct = day_ret / per_slot
                    + Normal::new(0.0, cfg.return_noise_sd / per_slot.sqrt())
                        .expect("valid sd")
                        .sample(&mut rng);
                buckets.push(BucketRow {
                    date: calendar.days()[t],
                    slot,
                    ret_pct,
                    volume,
                });
            }
        }
    }

    // Controls: independent noise unless confounded.
    let mut controls_rng = seeding::unit_rng(cfg.seed, stream::SYNTH_CONTROLS, 0);
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let leak = if cfg.confounded_controls { 0.3 } else { 0.0 };
    let mut controls: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    let mut covid_level = 8.0f64;
    for t in 0..cfg.days {
        let day = calendar.days()[t];
        let z = latent[LATENT_BURN_IN + t];
        let mut push = |name: &str, value: f64| {
            controls.entry(name.to_string()).or_default().push((day, value));
        };
        push("epu", 100.0 + 20.0 * (gauss.sample(&mut controls_rng) + leak * z));
        push("ads", gauss.sample(&mut controls_rng) + leak * z);
        push(
            "ea_count",
            Poisson::new(40.0).expect("valid mean").sample(&mut controls_rng).round(),
        );
        push("msg_count", daily_totals[t] as f64);
        push(
            "media_sent",
            0.1 + 0.04 * (gauss.sample(&mut controls_rng) + leak * z),
        );
        push(
            "cloud_cover",
            (2.0 + gauss.sample(&mut controls_rng)).clamp(0.0, 4.0),
        );
        covid_level = (covid_level + 0.5 * gauss.sample(&mut controls_rng)).clamp(0.0, 21.0);
        push("covid_index", covid_level);
        push("eff", 0.025 * (gauss.sample(&mut controls_rng) + leak * z));
        push("bff", 0.178 * (gauss.sample(&mut controls_rng) - leak * z));
    }

    // Monthly survey-style controls: one row per month, starting the month
    // before the sample so broadcasting covers the first trading days.
    let mut monthly_controls: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    {
        let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_CONTROLS, 1);
        let first = cfg.start;
        let last = calendar.last_day();
        let mut year = first.year();
        let mut month = first.month();
        // Step back one month.
        if month == 1 {
            year -= 1;
            month = 12;
        } else {
            month -= 1;
        }
        loop {
            let stamp = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month start");
            monthly_controls
                .entry("bw".into())
                .or_default()
                .push((stamp, 0.5 + 0.8 * gauss.sample(&mut rng)));
            monthly_controls
                .entry("ics".into())
                .or_default()
                .push((stamp, 70.0 + 9.0 * gauss.sample(&mut rng)));
            if (year, month) >= (last.year(), last.month()) {
                break;
            }
            if month == 12 {
                year += 1;
                month = 1;
            } else {
                month += 1;
            }
        }
    }

    // Firm panel: market beta plus idiosyncratic noise.
    let mut firm_panel = Vec::new();
    let firm_factor_names: Vec<String> =
        ["mkt", "smb", "hml", "rmw", "cma"].iter().map(|s| s.to_string()).collect();
    if cfg.firm_count > 0 {
        let mut rng = seeding::unit_rng(cfg.seed, stream::SYNTH_FIRMS, 0);
        let betas: Vec<f64> = (0..cfg.firm_count)
            .map(|_| 0.5 + rng.random::<f64>())
            .collect();
        let caps: Vec<f64> = (0..cfg.firm_count)
            .map(|_| (8.0 + 4.0 * rng.random::<f64>()).exp())
            .collect();
        let idio_sd: Vec<f64> = (0..cfg.firm_count)
            .map(|_| 0.5 + 2.0 * rng.random::<f64>())
            .collect();
        for t in 0..cfg.days {
            let day = calendar.days()[t];
            let mkt = market[t].1;
            let factors: Vec<f64> = std::iter::once(mkt)
                .chain((1..5).map(|_| gauss.sample(&mut rng) * 0.3))
                .collect();
            for f in 0..cfg.firm_count {
                let ret = betas[f] * mkt + idio_sd[f] * gauss.sample(&mut rng);
                firm_panel.push((day, format!("f{f:04}"), ret, caps[f], factors.clone()));
            }
        }
    }

    let truth = WorldTruth {
        config: cfg.clone(),
        latent: (0..cfg.days)
            .map(|t| (calendar.days()[t], latent[LATENT_BURN_IN + t]))
            .collect(),
        gif_valences: valences
            .iter()
            .enumerate()
            .map(|(j, &v)| (gif_id(j), v))
            .collect(),
    };

    Ok(SyntheticWorld {
        calendar,
        posts,
        market,
        buckets,
        controls,
        monthly_controls,
        firm_panel,
        firm_factor_names,
        truth,
    })
}

/// Stream the per-day post batches to a consumer without materializing the
/// whole corpus. Batches arrive in day order; generation runs ahead in
/// parallel chunks. Each batch is already sorted by (timestamp, post_id).
pub fn stream_posts<F>(cfg: &WorldConfig, mut consume: F) -> Result<TradingCalendar, SynthError>
where
    F: FnMut(usize, NaiveDate, Vec<PostRecord>),
{
    cfg.validate()?;
    let calendar = TradingCalendar::weekdays(cfg.start, cfg.days);
    let valences = gif_catalog(cfg);
    let latent = latent_path(cfg);
    const CHUNK: usize = 16;
    let mut t = 0;
    while t < cfg.days {
        let hi = (t + CHUNK).min(cfg.days);
        let batches: Vec<(usize, Vec<PostRecord>)> = (t..hi)
            .into_par_iter()
            .map(|idx| {
                let mut batch =
                    day_posts(cfg, &calendar, &valences, idx, latent[LATENT_BURN_IN + idx]);
                batch.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));
                (idx, batch)
            })
            .collect();
        for (idx, batch) in batches {
            consume(idx, calendar.days()[idx], batch);
        }
        t = hi;
    }
    Ok(calendar)
}

/// Sign pattern of the planted (day-0, week, month) regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Plus
        } else if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }
}

/// Expected coefficient signs for (day-0, week, month) horizons.
///
/// Day 0 is the sign of the contemporaneous effect and the month horizon
/// the sign of the reversal. The week horizon nets the AR(1) carryover of
/// the contemporaneous effect against the early part of the distributed-lag
/// reversal; with no planted reversal there is no net reversal to sign.
pub fn expected_signs(cfg: &WorldConfig) -> [Sign; 3] {
    let day0 = Sign::of(cfg.beta_contemporaneous);
    let month = Sign::of(-cfg.beta_reversal);
    let week = if cfg.beta_reversal == 0.0 {
        Sign::Zero
    } else {
        let mut net = 0.0;
        for j in 1..=5i32 {
            net += cfg.beta_contemporaneous * cfg.rho.powi(j);
            for k in 1..=20i32 {
                net -= cfg.beta_reversal / 20.0 * cfg.rho.powi((j - k).abs());
            }
        }
        Sign::of(net)
    };
    [day0, week, month]
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

impl SyntheticWorld {
    /// Write the world in exactly the formats the ingestion side consumes:
    /// corpus JSONL, calendar, market/bucket/control/firm CSVs, truth JSON.
    pub fn write_all(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;

        let mut corpus = String::new();
        for post in &self.posts {
            corpus.push_str(&serde_json::to_string(post)?);
            corpus.push('\n');
        }
        write_file(&dir.join("corpus.jsonl"), &corpus)?;

        let mut calendar = String::from("date\n");
        for day in self.calendar.days() {
            calendar.push_str(&format!("{day}\n"));
        }
        write_file(&dir.join("calendar.txt"), &calendar)?;

        let mut market = String::from("date,ret_pct\n");
        for (day, ret) in &self.market {
            market.push_str(&format!("{day},{ret}\n"));
        }
        write_file(&dir.join("market.csv"), &market)?;

        if !self.buckets.is_empty() {
            let mut out = String::from("date,slot,ret_pct,volume\n");
            for b in &self.buckets {
                out.push_str(&format!("{},{},{},{}\n", b.date, b.slot, b.ret_pct, b.volume));
            }
            write_file(&dir.join("buckets.csv"), &out)?;
        }

        write_file(
            &dir.join("controls.csv"),
            &columns_csv(&self.controls),
        )?;
        write_file(
            &dir.join("controls_monthly.csv"),
            &columns_csv(&self.monthly_controls),
        )?;

        if !self.firm_panel.is_empty() {
            let mut out = String::from("date,firm_id,ret_pct,mktcap");
            for name in &self.firm_factor_names {
                out.push(',');
                out.push_str(name);
            }
            out.push('\n');
            for (day, firm, ret, cap, factors) in &self.firm_panel {
                out.push_str(&format!("{day},{firm},{ret},{cap}"));
                for f in factors {
                    out.push_str(&format!(",{f}"));
                }
                out.push('\n');
            }
            write_file(&dir.join("firm_panel.csv"), &out)?;
        }

        write_file(
            &dir.join("truth.json"),
            &serde_json::to_string_pretty(&self.truth)?,
        )?;
        write_file(
            &dir.join("schema.json"),
            &serde_json::to_string_pretty(&crate::post::SchemaMap::default())?,
        )?;
        Ok(())
    }
}

/// Render date-keyed columns as a single CSV with a shared date axis.
fn columns_csv(columns: &BTreeMap<String, Vec<(NaiveDate, f64)>>) -> String {
    let mut dates: Vec<NaiveDate> = Vec::new();
    for rows in columns.values() {
        for (d, _) in rows {
            if !dates.contains(d) {
                dates.push(*d);
            }
        }
    }
    dates.sort();
    let names: Vec<&String> = columns.keys().collect();
    let mut out = String::from("date");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    let maps: Vec<BTreeMap<NaiveDate, f64>> = names
        .iter()
        .map(|n| columns[**n].iter().cloned().collect())
        .collect();
    for d in &dates {
        out.push_str(&d.to_string());
        for m in &maps {
            out.push(',');
            if let Some(v) = m.get(d) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, content: &str) -> Result<(), SynthError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}
