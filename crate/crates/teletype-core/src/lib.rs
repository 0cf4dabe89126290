//! End-to-end type-error telemetry pipeline for a small gradually-typed
//! scripting language.
//!
//! The crate has four cooperating parts:
//!
//! - a client library ([`client`]) that watches edits, runs the bundled
//!   three-mode analyzer ([`analyzer`]), and emits privacy-scrubbed numeric
//!   summaries ([`record`]) under two-level random sampling ([`sampler`]);
//! - an ingestion service ([`ingest`]) that stamps server time and persists
//!   records to an append-only day-file store;
//! - an analysis toolkit ([`metrics`]) that reproduces the usual summary
//!   tables (records per hour, size and session distributions, mode
//!   transitions, per-kind edit deltas, error density, ...) from any store;
//! - a deterministic session simulator ([`sim`]) whose ground-truth ledger
//!   doubles as an independent oracle for every table.
//!
//! Records never carry source text: only counts, fixed enum tags, and digits
//! cross the serialization boundary, and [`privacy::audit_privacy`] can verify
//! that against a project-derived forbidden-string set.

pub mod analyzer;
pub mod client;
pub mod edit_range;
pub mod ingest;
pub mod kind;
pub mod metrics;
pub mod privacy;
pub mod record;
pub mod sampler;
pub mod sim;

pub use edit_range::{EditOp, EditRange};
pub use kind::{AnalysisError, ErrorKind, ModuleId};
pub use record::{
    clean, parse_record, serialize_record, EditKindCounts, EditLines, LocCounts, Mode,
    OverallCounts, Reason, RecordError, SessionId, TelemetryRecord,
};
