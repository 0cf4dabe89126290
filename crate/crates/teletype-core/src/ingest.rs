//! Record ingestion: parse, stamp server time, append to day files.
//!
//! The store is an append-only directory of `records-YYYYMMDD.jsonl` files
//! keyed by the server timestamp's UTC date. Appends go through a single
//! writer and are flushed and synced before the request is acknowledged, so
//! an acknowledged record survives a crash. Duplicate detection happens at
//! export time (via [`crate::record::clean`]), keeping the ingest path
//! append-only.
//!
//! HTTP surface:
//!
//! - `POST /v1/records` with one wire line per record; responds
//!   `{"accepted": n, "rejected": m}`. Bodies over the configured limit are
//!   rejected whole.
//! - `GET /v1/export?session=&from_ms=&to_ms=&cleaned=` streams records in
//!   append order as text, optionally cleaned, then filtered by session id
//!   and server-timestamp window.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::Router;
use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::record::{clean, parse_record, serialize_record, SessionId, TelemetryRecord};

pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("stored line {line} is invalid: {message}")]
    Corrupt { line: usize, message: String },
}

/// Outcome of one ingest batch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestOutcome {
    pub accepted: u64,
    pub rejected: u64,
    /// (1-based line number, reason) for each rejected line; not part of
    /// the HTTP response.
    #[serde(skip)]
    pub rejections: Vec<(usize, String)>,
}

/// Export filter; all fields optional.
#[derive(Debug, Clone, Default)]
pub struct ExportFilter {
    pub session: Option<SessionId>,
    pub from_ms: Option<u64>,
    pub to_ms: Option<u64>,
    pub cleaned: bool,
}

/// Append-only record store over a directory of day files.
pub struct RecordStore {
    dir: PathBuf,
    /// Serializes appends and enforces non-decreasing server stamps.
    writer: Mutex<u64>,
}

impl RecordStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<RecordStore, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(RecordStore {
            dir,
            writer: Mutex::new(0),
        })
    }

    pub fn dir(&self) -> &std::path::Path {
        &self.dir
    }

    fn day_file(&self, server_ts_ms: u64) -> PathBuf {
        let date = DateTime::from_timestamp_millis(server_ts_ms as i64)
            .expect("server timestamps are in range")
            .format("%Y%m%d");
        self.dir.join(format!("records-{date}.jsonl"))
    }

    /// Parse each line of a batch, stamp server time, and append valid
    /// records. Invalid lines are rejected individually.
    pub fn ingest(&self, body: &str) -> Result<IngestOutcome, StoreError> {
        self.ingest_at(body, now_ms())
    }

    /// As [`RecordStore::ingest`] with an explicit clock, for tests and
    /// simulated ingestion.
    pub fn ingest_at(&self, body: &str, wall_ms: u64) -> Result<IngestOutcome, StoreError> {
        let mut outcome = IngestOutcome::default();
        let mut stamped: Vec<TelemetryRecord> = Vec::new();
        {
            let mut last = self.writer.lock().expect("writer lock");
            for (idx, line) in body.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match parse_record(line) {
                    Ok(mut record) => {
                        *last = (*last).max(wall_ms);
                        record.server_ts_ms = Some(*last);
                        stamped.push(record);
                        outcome.accepted += 1;
                    }
                    Err(e) => {
                        outcome.rejected += 1;
                        outcome.rejections.push((idx + 1, e.to_string()));
                    }
                }
            }
            // group by day file, preserving order within the batch
            let mut by_file: BTreeMap<PathBuf, Vec<String>> = BTreeMap::new();
            for record in &stamped {
                let line = serialize_record(record)
                    .expect("restamped record still satisfies invariants");
                by_file
                    .entry(self.day_file(record.server_ts_ms.unwrap()))
                    .or_default()
                    .push(line);
            }
            for (path, lines) in by_file {
                let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
                for line in lines {
                    writeln!(file, "{line}")?;
                }
                file.flush()?;
                file.sync_all()?;
            }
        }
        Ok(outcome)
    }

    /// Every stored record in append order (day files sorted by name).
    pub fn read_all(&self) -> Result<Vec<TelemetryRecord>, StoreError> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&self.dir)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("records-") && n.ends_with(".jsonl"))
            })
            .collect();
        paths.sort();
        let mut records = Vec::new();
        let mut line_no = 0usize;
        for path in paths {
            let text = std::fs::read_to_string(&path)?;
            for line in text.lines() {
                line_no += 1;
                if line.trim().is_empty() {
                    continue;
                }
                records.push(parse_record(line).map_err(|e| StoreError::Corrupt {
                    line: line_no,
                    message: e.to_string(),
                })?);
            }
        }
        Ok(records)
    }

    /// Stream records in append order. Cleaning (when requested) runs over
    /// the whole store first; filters apply afterwards.
    pub fn export(&self, filter: &ExportFilter) -> Result<Vec<TelemetryRecord>, StoreError> {
        let mut records = self.read_all()?;
        if filter.cleaned {
            records = clean(records);
        }
        records.retain(|r| {
            if let Some(session) = filter.session {
                if r.session_id != session {
                    return false;
                }
            }
            let ts = r.server_ts_ms.unwrap_or(r.client_ts_ms);
            if let Some(from) = filter.from_ms {
                if ts < from {
                    return false;
                }
            }
            if let Some(to) = filter.to_ms {
                if ts > to {
                    return false;
                }
            }
            true
        });
        Ok(records)
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("clock after epoch")
        .as_millis() as u64
}

/// Shared state for the HTTP service.
pub struct IngestService {
    pub store: RecordStore,
    pub body_limit: usize,
}

impl IngestService {
    pub fn new(store: RecordStore) -> IngestService {
        IngestService {
            store,
            body_limit: DEFAULT_BODY_LIMIT,
        }
    }
}

#[derive(Serialize)]
struct IngestResponse {
    accepted: u64,
    rejected: u64,
}

async fn post_records(
    State(service): State<Arc<IngestService>>,
    body: String,
) -> Result<axum::Json<IngestResponse>, (StatusCode, String)> {
    if body.len() > service.body_limit {
        return Err((
            StatusCode::PAYLOAD_TOO_LARGE,
            format!(
                "body of {} bytes exceeds limit of {} bytes",
                body.len(),
                service.body_limit
            ),
        ));
    }
    let outcome = service
        .store
        .ingest(&body)
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(axum::Json(IngestResponse {
        accepted: outcome.accepted,
        rejected: outcome.rejected,
    }))
}

#[derive(Deserialize)]
struct ExportParams {
    session: Option<String>,
    from_ms: Option<u64>,
    to_ms: Option<u64>,
    cleaned: Option<bool>,
}

async fn get_export(
    State(service): State<Arc<IngestService>>,
    Query(params): Query<ExportParams>,
) -> Result<String, (StatusCode, String)> {
    let session = match &params.session {
        Some(digits) => Some(
            SessionId::from_digits(digits)
                .map_err(|e| (StatusCode::BAD_REQUEST, e.to_string()))?,
        ),
        None => None,
    };
    let filter = ExportFilter {
        session,
        from_ms: params.from_ms,
        to_ms: params.to_ms,
        cleaned: params.cleaned.unwrap_or(false),
    };
    let records = service
        .store
        .export(&filter)
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mut out = String::new();
    for record in records {
        out.push_str(&serialize_record(&record).map_err(|e| {
            (StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        })?);
        out.push('\n');
    }
    Ok(out)
}

/// Build the service router.
pub fn router(service: Arc<IngestService>) -> Router {
    Router::new()
        .route("/v1/records", post(post_records))
        .route("/v1/export", get(get_export))
        .with_state(service)
}
