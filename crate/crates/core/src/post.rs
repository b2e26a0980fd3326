//! Post corpus parsing: line-delimited JSON into validated [`PostRecord`]s.
//!
//! Cashtags are `$TICKER` tokens in the body; GIF identifiers come from
//! Giphy media URLs of the form `https://media2.giphy.com/media/{id}/giphy.gif`
//! (any `mediaN` host). Both lists are deduplicated in first-appearance
//! order. The body text is preserved verbatim so a record can always be
//! re-serialized and re-parsed into an identical record.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("missing timestamp")]
    MissingTimestamp,
    #[error("invalid declaration value: {0}")]
    InvalidDeclaration(String),
    #[error("{path}:{line}: {source}")]
    AtLine {
        path: String,
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("failed to read posts: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid schema file: {0}")]
    BadSchema(String),
}

/// Self-declared stance attached to a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Declaration {
    Bullish,
    Bearish,
    #[default]
    None,
}

/// One parsed social-media post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub user_id: String,
    pub body: String,
    pub cashtags: Vec<String>,
    pub gif_ids: Vec<String>,
    pub declaration: Declaration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_score: Option<f64>,
}

impl PostRecord {
    /// Posts without any cashtag are retained but flagged as non-market;
    /// the index stage filters on this flag.
    pub fn is_market_post(&self) -> bool {
        !self.cashtags.is_empty()
    }

    pub fn has_gif(&self) -> bool {
        !self.gif_ids.is_empty()
    }
}

/// Maps canonical field names onto the JSON keys of the input corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaMap {
    pub post_id: String,
    pub timestamp: String,
    pub user_id: String,
    pub body: String,
    pub declaration: String,
    pub text_score: String,
}

impl Default for SchemaMap {
    fn default() -> Self {
        Self {
            post_id: "post_id".into(),
            timestamp: "timestamp".into(),
            user_id: "user_id".into(),
            body: "body".into(),
            declaration: "declaration".into(),
            text_score: "text_score".into(),
        }
    }
}

impl SchemaMap {
    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CorpusError::BadSchema(e.to_string()))
    }
}

fn cashtag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$([A-Za-z][A-Za-z0-9]{0,9}(?:\.[A-Za-z]{1,4})?)\b").unwrap())
}

fn gif_url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"https://media\d*\.giphy\.com/media/([0-9A-Za-z]+)/giphy\.gif").unwrap()
    })
}

/// Extract deduplicated uppercase cashtags from a body text.
pub fn extract_cashtags(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    for cap in cashtag_regex().captures_iter(body) {
        let tag = cap[1].to_ascii_uppercase();
        if !out.contains(&tag) {
            out.push(tag);
        }
    }
    out
}

/// Extract deduplicated GIF identifiers from Giphy media URLs in a body text.
pub fn extract_gif_ids(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    for cap in gif_url_regex().captures_iter(body) {
        let id = cap[1].to_string();
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

/// Parse one JSONL record into a [`PostRecord`].
pub fn parse_post(raw_line: &str, schema: &SchemaMap) -> Result<PostRecord, CorpusError> {
    let v: Value = serde_json::from_str(raw_line)
        .map_err(|e| CorpusError::MalformedRecord(format!("not valid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| CorpusError::MalformedRecord("not a JSON object".into()))?;

    let ts_raw = match obj.get(&schema.timestamp) {
        None | Some(Value::Null) => return Err(CorpusError::MissingTimestamp),
        Some(Value::String(s)) => s,
        Some(other) => {
            return Err(CorpusError::MalformedRecord(format!(
                "timestamp must be a string, got {other}"
            )))
        }
    };
    let timestamp = DateTime::parse_from_rfc3339(ts_raw)
        .map_err(|e| CorpusError::MalformedRecord(format!("bad timestamp {ts_raw:?}: {e}")))?
        .with_timezone(&Utc);

    let str_field = |key: &str, required: bool| -> Result<String, CorpusError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            None | Some(Value::Null) if !required => Ok(String::new()),
            None | Some(Value::Null) => {
                Err(CorpusError::MalformedRecord(format!("missing field {key:?}")))
            }
            Some(other) => Err(CorpusError::MalformedRecord(format!(
                "field {key:?} must be a string, got {other}"
            ))),
        }
    };
    let post_id = str_field(&schema.post_id, true)?;
    let user_id = str_field(&schema.user_id, false)?;
    let body = str_field(&schema.body, false)?;

    // Unknown string values map to None (the declaration is optional on the
    // platform); structurally invalid values are an error.
    let declaration = match obj.get(&schema.declaration) {
        None | Some(Value::Null) => Declaration::None,
        Some(Value::String(s)) => match s.to_ascii_lowercase().as_str() {
            "bullish" => Declaration::Bullish,
            "bearish" => Declaration::Bearish,
            _ => Declaration::None,
        },
        Some(other) => return Err(CorpusError::InvalidDeclaration(other.to_string())),
    };

    let text_score = match obj.get(&schema.text_score) {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
                return Err(CorpusError::MalformedRecord(format!(
                    "text_score {x} outside [-1, 1]"
                )));
            }
            Some(x)
        }
        Some(other) => {
            return Err(CorpusError::MalformedRecord(format!(
                "text_score must be a number, got {other}"
            )))
        }
    };

    Ok(PostRecord {
        cashtags: extract_cashtags(&body),
        gif_ids: extract_gif_ids(&body),
        post_id,
        timestamp,
        user_id,
        body,
        declaration,
        text_score,
    })
}

/// Sort key used to merge worker outputs deterministically.
fn record_key(p: &PostRecord) -> (DateTime<Utc>, String) {
    (p.timestamp, p.post_id.clone())
}

/// Parse one file sequentially; fails fast with file/line context.
pub fn read_posts(path: &Path, schema: &SchemaMap) -> Result<Vec<PostRecord>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_post(line, schema).map_err(|e| CorpusError::AtLine {
            path: path.display().to_string(),
            line: i + 1,
            source: Box::new(e),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Parse one or more JSONL files on `workers` threads.
///
/// Lines are parsed independently and the merged output is sorted by
/// `(timestamp, post_id)`, so the result is identical for any worker count.
pub fn read_posts_parallel(
    paths: &[PathBuf],
    schema: &SchemaMap,
    workers: usize,
) -> Result<Vec<PostRecord>, CorpusError> {
    let mut texts = Vec::with_capacity(paths.len());
    for p in paths {
        texts.push((p.display().to_string(), std::fs::read_to_string(p)?));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");

    let mut posts = pool.install(|| -> Result<Vec<PostRecord>, CorpusError> {
        let mut all: Vec<Vec<PostRecord>> = Vec::new();
        for (name, text) in &texts {
            let lines: Vec<(usize, &str)> = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .collect();
            let parsed: Result<Vec<PostRecord>, CorpusError> = lines
                .par_iter()
                .map(|(i, line)| {
                    parse_post(line, schema).map_err(|e| CorpusError::AtLine {
                        path: name.clone(),
                        line: i + 1,
                        source: Box::new(e),
                    })
                })
                .collect();
            all.push(parsed?);
        }
        Ok(all.into_iter().flatten().collect())
    })?;
    posts.sort_by(|a, b| record_key(a).cmp(&record_key(b)));
    Ok(posts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SchemaMap {
        SchemaMap::default()
    }

    #[test]
    fn parses_cashtags_gifs_and_declaration() {
        let line = r#"{"post_id":"1","timestamp":"2021-03-02T14:00:00-05:00","user_id":"u1","body":"$AAPL to the moon https://media2.giphy.com/media/abc123/giphy.gif","declaration":"bullish"}"#;
        let p = parse_post(line, &schema()).unwrap();
        assert_eq!(p.cashtags, vec!["AAPL"]);
        assert_eq!(p.gif_ids, vec!["abc123"]);
        assert_eq!(p.declaration, Declaration::Bullish);
        assert!(p.is_market_post());
    }

    #[test]
    fn post_without_cashtags_is_flagged_not_dropped() {
        let line = r#"{"post_id":"2","timestamp":"2021-03-02T14:00:00Z","body":"no tickers here"}"#;
        let p = parse_post(line, &schema()).unwrap();
        assert!(p.cashtags.is_empty());
        assert!(!p.is_market_post());
        assert_eq!(p.declaration, Declaration::None);
    }

    #[test]
    fn duplicate_gif_url_counted_once() {
        let line = r#"{"post_id":"3","timestamp":"2021-03-02T14:00:00Z","body":"$SPY https://media0.giphy.com/media/xyz/giphy.gif and again https://media0.giphy.com/media/xyz/giphy.gif"}"#;
        let p = parse_post(line, &schema()).unwrap();
        assert_eq!(p.gif_ids, vec!["xyz"]);
    }

    #[test]
    fn missing_timestamp_is_distinct_error() {
        let line = r#"{"post_id":"4","body":"$SPY"}"#;
        assert!(matches!(
            parse_post(line, &schema()),
            Err(CorpusError::MissingTimestamp)
        ));
    }

    #[test]
    fn unknown_declaration_string_maps_to_none_but_bad_type_errors() {
        let ok = r#"{"post_id":"5","timestamp":"2021-03-02T14:00:00Z","body":"$SPY","declaration":"neutralish"}"#;
        assert_eq!(parse_post(ok, &schema()).unwrap().declaration, Declaration::None);
        let bad = r#"{"post_id":"6","timestamp":"2021-03-02T14:00:00Z","body":"$SPY","declaration":7}"#;
        assert!(matches!(
            parse_post(bad, &schema()),
            Err(CorpusError::InvalidDeclaration(_))
        ));
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(matches!(
            parse_post("{not json", &schema()),
            Err(CorpusError::MalformedRecord(_))
        ));
    }

    #[test]
    fn custom_schema_remaps_field_names() {
        let s = SchemaMap {
            post_id: "id".into(),
            timestamp: "created_at".into(),
            user_id: "author".into(),
            body: "text".into(),
            declaration: "stance".into(),
            text_score: "vader".into(),
        };
        let line = r#"{"id":"9","created_at":"2021-03-02T09:00:00-05:00","author":"u","text":"$TSLA","stance":"bearish","vader":-0.4}"#;
        let p = parse_post(line, &s).unwrap();
        assert_eq!(p.post_id, "9");
        assert_eq!(p.declaration, Declaration::Bearish);
        assert_eq!(p.text_score, Some(-0.4));
    }

    #[test]
    fn serialize_then_reparse_round_trips() {
        let line = r#"{"post_id":"7","timestamp":"2021-03-02T14:00:00-05:00","user_id":"u","body":"$SPY dip https://media2.giphy.com/media/q1/giphy.gif","declaration":"bearish","text_score":0.25}"#;
        let p = parse_post(line, &schema()).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let q = parse_post(&json, &schema()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parallel_read_is_worker_count_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.jsonl");
        let mut lines = String::new();
        for i in 0..200 {
            lines.push_str(&format!(
                "{{\"post_id\":\"p{i:03}\",\"timestamp\":\"2021-03-02T{:02}:{:02}:00Z\",\"body\":\"$SPY n{i}\"}}\n",
                9 + i % 8,
                i % 60
            ));
        }
        std::fs::write(&path, lines).unwrap();
        let one = read_posts_parallel(&[path.clone()], &schema(), 1).unwrap();
        let four = read_posts_parallel(&[path], &schema(), 4).unwrap();
        assert_eq!(one, four);
    }
}
