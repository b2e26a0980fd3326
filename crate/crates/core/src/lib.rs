//! GIF-based investor sentiment indexing and the statistical pipeline
//! around it: corpus parsing under a trading-day cutoff, an expanding-window
//! valence ledger with strict no-look-ahead semantics, multi-horizon return
//! regressions with moving-block-bootstrap and randomized inference,
//! robustness diagnostics, and a seeded synthetic world that serves as the
//! end-to-end oracle.

pub mod bootstrap;
pub mod calendar;
pub mod controls;
pub mod diagnostics;
pub mod index;
pub mod ledger;
pub mod metrics;
pub mod nelson_kim;
pub mod ols;
pub mod post;
pub mod regression;
pub mod seeding;
pub mod series;
pub mod stats;
pub mod synth;

pub use calendar::{Bucket, CalendarError, TradingCalendar, SLOTS_PER_DAY};
pub use index::{
    build_index, DenominatorMode, IndexAccumulator, IndexError, IndexOptions, IndexOutput,
    WindowMode,
};
pub use ledger::{DayDelta, GifCounters, LedgerError, ValenceLedger};
pub use post::{parse_post, CorpusError, Declaration, PostRecord, SchemaMap};
pub use regression::{
    run_regression, run_table, EconError, Inference, RegressionResult, RegressionSpec,
    RegressionTable, SeriesStore,
};
pub use series::{Flavor, Frequency, SentimentSeries, SeriesError, SeriesKey};
pub use synth::{expected_signs, generate_world, Sign, SynthError, WorldConfig};
