//! Per-request token and latency log (`telemetry.jsonl`) and its aggregation
//! into per-model averages.
//!
//! `total_tokens` is prompt plus completion tokens; `null` means the endpoint
//! did not report usage, and such records are left out of the token average.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{ModelResponse, Stage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub image_id: String,
    pub stage: Stage,
    pub model_id: String,
    pub total_tokens: Option<i64>,
    pub latency_ms: i64,
    /// Unix milliseconds.
    pub timestamp_ms: i64,
}

impl RequestRecord {
    pub fn from_response(image_id: &str, stage: Stage, response: &ModelResponse, timestamp_ms: i64) -> Self {
        RequestRecord {
            image_id: image_id.to_string(),
            stage,
            model_id: response.model_id.clone(),
            total_tokens: response.total_tokens(),
            latency_ms: response.latency_ms,
            timestamp_ms,
        }
    }

    fn check(&self) -> Result<(), TelemetryError> {
        if self.latency_ms < 0 {
            return Err(TelemetryError::Invariant(format!(
                "negative latency {} ms for {}",
                self.latency_ms, self.image_id
            )));
        }
        if let Some(tokens) = self.total_tokens.filter(|t| *t < 0) {
            return Err(TelemetryError::Invariant(format!(
                "negative token count {tokens} for {}",
                self.image_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("telemetry I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid request record: {0}")]
    Invariant(String),
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("no requests logged for model {0}")]
    EmptyLog(String),
}

/// Append-only JSON-lines log. Each record is written with a single
/// `write_all` on an `O_APPEND` handle while holding the writer lock.
pub struct TelemetryLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl TelemetryLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, TelemetryError> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(TelemetryLog {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record_request(&self, record: &RequestRecord) -> Result<(), TelemetryError> {
        record.check()?;
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        let mut file = self.file.lock().expect("telemetry lock");
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

pub fn parse_log(text: &str) -> Result<Vec<RequestRecord>, TelemetryError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| TelemetryError::Parse {
                line: index + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<RequestRecord>, TelemetryError> {
    parse_log(&std::fs::read_to_string(path)?)
}

/// Exact running sums; mergeable across logs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RequestTotals {
    pub request_count: u64,
    pub known_token_count: u64,
    pub token_sum: i64,
    pub latency_sum_ms: i64,
}

impl RequestTotals {
    pub fn add(&mut self, record: &RequestRecord) {
        self.request_count += 1;
        self.latency_sum_ms += record.latency_ms;
        if let Some(tokens) = record.total_tokens {
            self.known_token_count += 1;
            self.token_sum += tokens;
        }
    }

    pub fn merge(self, other: RequestTotals) -> RequestTotals {
        RequestTotals {
            request_count: self.request_count + other.request_count,
            known_token_count: self.known_token_count + other.known_token_count,
            token_sum: self.token_sum + other.token_sum,
            latency_sum_ms: self.latency_sum_ms + other.latency_sum_ms,
        }
    }

    pub fn mean_tokens(&self) -> Option<f64> {
        (self.known_token_count > 0).then(|| self.token_sum as f64 / self.known_token_count as f64)
    }

    pub fn mean_latency_s(&self) -> Option<f64> {
        (self.request_count > 0).then(|| self.latency_sum_ms as f64 / self.request_count as f64 / 1000.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub model_id: String,
    pub request_count: u64,
    /// `None` when no record carried a token count.
    pub avg_tokens_per_request: Option<f64>,
    /// Seconds, rounded to two decimals.
    pub avg_latency_s: f64,
    pub unknown_token_count: u64,
}

impl AggregateStats {
    fn from_totals(model_id: &str, totals: RequestTotals) -> Self {
        AggregateStats {
            model_id: model_id.to_string(),
            request_count: totals.request_count,
            avg_tokens_per_request: totals.mean_tokens(),
            avg_latency_s: round2(totals.mean_latency_s().unwrap_or(0.0)),
            unknown_token_count: totals.request_count - totals.known_token_count,
        }
    }
}

fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

pub fn totals_for<'a>(records: impl IntoIterator<Item = &'a RequestRecord>, model_id: &str) -> RequestTotals {
    let mut totals = RequestTotals::default();
    for record in records.into_iter().filter(|r| r.model_id == model_id) {
        totals.add(record);
    }
    totals
}

/// Mean tokens (known values only) and mean latency per request for one model.
pub fn aggregate(records: &[RequestRecord], model_id: &str) -> Result<AggregateStats, TelemetryError> {
    let totals = totals_for(records, model_id);
    if totals.request_count == 0 {
        return Err(TelemetryError::EmptyLog(model_id.to_string()));
    }
    Ok(AggregateStats::from_totals(model_id, totals))
}

/// One [`AggregateStats`] per model, ordered by model id.
pub fn aggregate_all(records: &[RequestRecord]) -> Vec<AggregateStats> {
    let mut per_model: BTreeMap<&str, RequestTotals> = BTreeMap::new();
    for record in records {
        per_model.entry(&record.model_id).or_default().add(record);
    }
    per_model
        .into_iter()
        .map(|(model, totals)| AggregateStats::from_totals(model, totals))
        .collect()
}

/// Per-image request-count check: exactly one detect request and at most one
/// extract request. Returns the offending image ids with their counts.
pub fn request_count_violations(records: &[RequestRecord]) -> Vec<(String, usize, usize)> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for record in records {
        let entry = counts.entry(&record.image_id).or_default();
        match record.stage {
            Stage::Detect => entry.0 += 1,
            Stage::Extract => entry.1 += 1,
        }
    }
    let mut bad: Vec<(String, usize, usize)> = counts
        .into_iter()
        .filter(|(_, (detect, extract))| *detect != 1 || *extract > 1)
        .map(|(id, (d, e))| (id.to_string(), d, e))
        .collect();
    bad.sort();
    bad
}

/// Table-shaped text rendering of per-model averages.
pub fn render_stats_table(stats: &[AggregateStats]) -> String {
    let header = [
        "Model",
        "Requests",
        "Avg. Tokens per Request",
        "Avg. Latency per Request",
    ];
    let rows: Vec<[String; 4]> = stats
        .iter()
        .map(|s| {
            [
                s.model_id.clone(),
                s.request_count.to_string(),
                s.avg_tokens_per_request
                    .map(format_tokens)
                    .unwrap_or_else(|| "unknown".into()),
                format!("{:.2}s", s.avg_latency_s),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let body: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!(" {c:<w$} ")).collect();
        format!("|{}|\n", body.join("|"))
    };
    let rule = format!(
        "|{}|\n",
        widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
    );
    let mut out = line(&header);
    out.push_str(&rule);
    for row in &rows {
        out.push_str(&line(&row.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    out
}

fn format_tokens(value: f64) -> String {
    if (value - value.round()).abs() < 1e-9 {
        format!("{}", value.round() as i64)
    } else {
        format!("{value:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(image: &str, stage: Stage, model: &str, tokens: Option<i64>, latency: i64) -> RequestRecord {
        RequestRecord {
            image_id: image.into(),
            stage,
            model_id: model.into(),
            total_tokens: tokens,
            latency_ms: latency,
            timestamp_ms: 0,
        }
    }

    #[test]
    fn append_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let log = TelemetryLog::open(dir.path().join("telemetry.jsonl")).unwrap();
        let r = record("a", Stage::Detect, "m", Some(12), 34);
        log.record_request(&r).unwrap();
        assert_eq!(read_log(log.path()).unwrap(), vec![r]);
    }

    #[test]
    fn rejects_negative_latency() {
        let dir = tempfile::tempdir().unwrap();
        let log = TelemetryLog::open(dir.path().join("t.jsonl")).unwrap();
        let err = log
            .record_request(&record("a", Stage::Detect, "m", None, -1))
            .unwrap_err();
        assert!(matches!(err, TelemetryError::Invariant(_)));
        assert!(read_log(log.path()).unwrap().is_empty());
    }

    #[test]
    fn concurrent_writers_do_not_tear() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let a = TelemetryLog::open(&path).unwrap();
        let b = TelemetryLog::open(&path).unwrap();
        std::thread::scope(|s| {
            for (log, name) in [(&a, "writer-a"), (&b, "writer-b")] {
                s.spawn(move || {
                    for i in 0..1000 {
                        let id = format!("{name}-{i}");
                        log.record_request(&record(&id, Stage::Detect, "m", Some(i), i))
                            .unwrap();
                    }
                });
            }
        });
        let records = read_log(&path).unwrap();
        assert_eq!(records.len(), 2000);
        for name in ["writer-a", "writer-b"] {
            let mine: Vec<_> = records.iter().filter(|r| r.image_id.starts_with(name)).collect();
            assert_eq!(mine.len(), 1000);
            // each writer's own records stay in order
            assert!(mine.windows(2).all(|w| w[0].latency_ms < w[1].latency_ms));
        }
    }

    #[test]
    fn singleton_and_unknown_tokens() {
        let one = [record("a", Stage::Detect, "m", Some(1000), 5000)];
        let stats = aggregate(&one, "m").unwrap();
        assert_eq!(stats.avg_tokens_per_request, Some(1000.0));
        assert_eq!(stats.avg_latency_s, 5.00);

        let unknown = [
            record("a", Stage::Detect, "m", None, 1000),
            record("b", Stage::Detect, "m", None, 2000),
        ];
        let stats = aggregate(&unknown, "m").unwrap();
        assert_eq!(stats.avg_tokens_per_request, None);
        assert_eq!(stats.unknown_token_count, 2);
        assert_eq!(stats.avg_latency_s, 1.5);

        assert!(matches!(aggregate(&unknown, "other"), Err(TelemetryError::EmptyLog(_))));
    }

    #[test]
    fn request_count_law_from_log() {
        let ok = [
            record("a", Stage::Detect, "m", None, 1),
            record("a", Stage::Extract, "m", None, 1),
            record("b", Stage::Detect, "m", None, 1),
        ];
        assert!(request_count_violations(&ok).is_empty());
        let bad = [
            record("a", Stage::Extract, "m", None, 1),
            record("b", Stage::Detect, "m", None, 1),
            record("b", Stage::Detect, "m", None, 1),
        ];
        assert_eq!(
            request_count_violations(&bad),
            vec![("a".to_string(), 0, 1), ("b".to_string(), 2, 0)]
        );
    }

    #[test]
    fn table_rendering() {
        let stats = vec![AggregateStats {
            model_id: "gemini-2.0-flash".into(),
            request_count: 160,
            avg_tokens_per_request: Some(2386.0),
            avg_latency_s: 2.64,
            unknown_token_count: 0,
        }];
        let table = render_stats_table(&stats);
        assert!(table.contains("| gemini-2.0-flash | 160      | 2386                    | 2.64s"));
    }
}
