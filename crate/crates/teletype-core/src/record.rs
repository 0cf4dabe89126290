//! Telemetry record schema, wire encoding, and data cleaning.
//!
//! One record is one line of flat JSON with fixed dotted field names. The
//! value vocabulary is digits plus a handful of fixed enum tags, which is
//! what makes the privacy audit in [`crate::privacy`] meaningful: nothing
//! project-specific can appear in a well-formed line.
//!
//! Wire keys, in canonical order:
//!
//! ```text
//! session_id  client_ts_ms  [server_ts_ms]  mode  reason  lines_total  lines_edit
//! overall.{type_curr|type_prev|bg_curr|bg_prev}.{total|module|edit}
//! overall.too_complex_total
//! edit_kinds.<KindTag>.{curr|prev}        (pairs that are (0,0) are omitted)
//! ```
//!
//! `lines_edit` is normally a non-negative count. Negative values can occur
//! in anomalous input (large deletions in the wild); cleaning keeps such
//! records but voids their edit fields with the string sentinel `"corrupt"`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::kind::ErrorKind;

/// Analysis mode of a module, also a record field.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Mode {
    Nocheck,
    Nonstrict,
    Strict,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Nocheck, Mode::Nonstrict, Mode::Strict];

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Nocheck => "nocheck",
            Mode::Nonstrict => "nonstrict",
            Mode::Strict => "strict",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Mode> {
        Mode::ALL.iter().copied().find(|m| m.tag() == tag)
    }

    /// Strength rank used for upgrade/downgrade classification.
    pub fn rank(self) -> u8 {
        match self {
            Mode::Nocheck => 0,
            Mode::Nonstrict => 1,
            Mode::Strict => 2,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Why a record was emitted.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Reason {
    Keystroke,
    ModuleSwitch,
}

impl Reason {
    pub fn tag(self) -> &'static str {
        match self {
            Reason::Keystroke => "keystroke",
            Reason::ModuleSwitch => "module_switch",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Reason> {
        match tag {
            "keystroke" => Some(Reason::Keystroke),
            "module_switch" => Some(Reason::ModuleSwitch),
            _ => None,
        }
    }
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Pseudonymous session identifier: a uniform 15-decimal-digit number,
/// zero-padded on the wire.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SessionId(u64);

/// Exclusive upper bound for session ids.
pub const SESSION_ID_SPACE: u64 = 1_000_000_000_000_000;

impl SessionId {
    pub fn new(value: u64) -> Result<SessionId, RecordError> {
        if value < SESSION_ID_SPACE {
            Ok(SessionId(value))
        } else {
            Err(RecordError::Invariant(format!(
                "session id {value} exceeds 15 decimal digits"
            )))
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn from_digits(digits: &str) -> Result<SessionId, RecordError> {
        if digits.len() != 15 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RecordError::Schema(format!(
                "session_id must be exactly 15 decimal digits, got {digits:?}"
            )));
        }
        SessionId::new(digits.parse().expect("digits fit in u64"))
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:015}", self.0)
    }
}

/// Three-level location summary for one analysis invocation.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize,
)]
pub struct LocCounts {
    pub total: u64,
    pub in_module: u64,
    pub in_edit_range: u64,
}

impl LocCounts {
    pub fn new(total: u64, in_module: u64, in_edit_range: u64) -> Self {
        LocCounts {
            total,
            in_module,
            in_edit_range,
        }
    }

    fn validate(&self, label: &str) -> Result<(), RecordError> {
        if self.in_edit_range > self.in_module || self.in_module > self.total {
            return Err(RecordError::Invariant(format!(
                "{label}: counts must satisfy in_edit_range <= in_module <= total, got ({}, {}, {})",
                self.total, self.in_module, self.in_edit_range
            )));
        }
        Ok(())
    }
}

/// The 13 overall counters: four location summaries plus the running count
/// of too-complex analysis failures.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize,
)]
pub struct OverallCounts {
    pub type_curr: LocCounts,
    pub type_prev: LocCounts,
    pub bg_curr: LocCounts,
    pub bg_prev: LocCounts,
    pub too_complex_total: u64,
}

impl OverallCounts {
    fn validate(&self) -> Result<(), RecordError> {
        self.type_curr.validate("overall.type_curr")?;
        self.type_prev.validate("overall.type_prev")?;
        self.bg_curr.validate("overall.bg_curr")?;
        self.bg_prev.validate("overall.bg_prev")?;
        Ok(())
    }
}

/// Per-kind (current, previous) overlap counters. Pairs that are (0,0) are
/// never stored, so a record carries at most 70 edit-kind scalars.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditKindCounts {
    entries: BTreeMap<ErrorKind, (u64, u64)>,
}

impl EditKindCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store a pair; (0,0) removes any existing entry instead.
    pub fn set(&mut self, kind: ErrorKind, curr: u64, prev: u64) {
        if curr == 0 && prev == 0 {
            self.entries.remove(&kind);
        } else {
            self.entries.insert(kind, (curr, prev));
        }
    }

    /// (curr, prev) for a kind; absent entries read as (0, 0).
    pub fn get(&self, kind: ErrorKind) -> (u64, u64) {
        self.entries.get(&kind).copied().unwrap_or((0, 0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ErrorKind, (u64, u64))> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Width of the edit range, or the post-cleaning sentinel for records whose
/// edit data was found corrupt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditLines {
    Lines(i64),
    Corrupt,
}

impl EditLines {
    pub fn as_count(self) -> Option<i64> {
        match self {
            EditLines::Lines(n) => Some(n),
            EditLines::Corrupt => None,
        }
    }

    /// Non-negative count if this is usable edit data.
    pub fn usable(self) -> Option<u64> {
        match self {
            EditLines::Lines(n) if n >= 0 => Some(n as u64),
            _ => None,
        }
    }
}

/// One privacy-scrubbed summary of the last two analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub session_id: SessionId,
    pub client_ts_ms: u64,
    /// Stamped by the ingestion service; absent on freshly emitted records.
    pub server_ts_ms: Option<u64>,
    pub mode: Mode,
    pub reason: Reason,
    pub lines_total: u64,
    pub lines_edit: EditLines,
    pub overall: OverallCounts,
    pub edit_kinds: EditKindCounts,
}

impl TelemetryRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        self.overall.validate()
    }

    /// Timestamp used for time bucketing: server time once ingested,
    /// client time otherwise.
    pub fn bucket_ts_ms(&self) -> u64 {
        self.server_ts_ms.unwrap_or(self.client_ts_ms)
    }
}

/// Errors from wire encoding, decoding, or invariant checks.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    /// The record violates a type invariant and must not be serialized.
    #[error("invariant violation: {0}")]
    Invariant(String),
    /// The line is not well-formed JSON.
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// Well-formed JSON that does not match the record schema.
    #[error("schema error: {0}")]
    Schema(String),
}

const OVERALL_KEYS: [(&str, &str); 4] = [
    ("overall.type_curr", "type_curr"),
    ("overall.type_prev", "type_prev"),
    ("overall.bg_curr", "bg_curr"),
    ("overall.bg_prev", "bg_prev"),
];

/// Encode a record as one line of the wire format.
///
/// The record is validated first; nothing is emitted for an invalid record.
pub fn serialize_record(record: &TelemetryRecord) -> Result<String, RecordError> {
    record.validate()?;
    let mut out = String::with_capacity(512);
    out.push('{');
    write!(out, "\"session_id\":\"{}\"", record.session_id).unwrap();
    write!(out, ",\"client_ts_ms\":{}", record.client_ts_ms).unwrap();
    if let Some(ts) = record.server_ts_ms {
        write!(out, ",\"server_ts_ms\":{ts}").unwrap();
    }
    write!(out, ",\"mode\":\"{}\"", record.mode.tag()).unwrap();
    write!(out, ",\"reason\":\"{}\"", record.reason.tag()).unwrap();
    write!(out, ",\"lines_total\":{}", record.lines_total).unwrap();
    match record.lines_edit {
        EditLines::Lines(n) => write!(out, ",\"lines_edit\":{n}").unwrap(),
        EditLines::Corrupt => out.push_str(",\"lines_edit\":\"corrupt\""),
    }
    for (prefix, field) in OVERALL_KEYS {
        let counts = match field {
            "type_curr" => record.overall.type_curr,
            "type_prev" => record.overall.type_prev,
            "bg_curr" => record.overall.bg_curr,
            _ => record.overall.bg_prev,
        };
        write!(out, ",\"{prefix}.total\":{}", counts.total).unwrap();
        write!(out, ",\"{prefix}.module\":{}", counts.in_module).unwrap();
        write!(out, ",\"{prefix}.edit\":{}", counts.in_edit_range).unwrap();
    }
    write!(
        out,
        ",\"overall.too_complex_total\":{}",
        record.overall.too_complex_total
    )
    .unwrap();
    for (kind, (curr, prev)) in record.edit_kinds.iter() {
        write!(out, ",\"edit_kinds.{}.curr\":{curr}", kind.tag()).unwrap();
        write!(out, ",\"edit_kinds.{}.prev\":{prev}", kind.tag()).unwrap();
    }
    out.push('}');
    Ok(out)
}

fn take_u64(map: &mut serde_json::Map<String, Value>, key: &str) -> Result<u64, RecordError> {
    let value = map
        .remove(key)
        .ok_or_else(|| RecordError::Schema(format!("missing field {key:?}")))?;
    value
        .as_u64()
        .ok_or_else(|| RecordError::Schema(format!("field {key:?} must be a non-negative integer")))
}

/// Decode one wire line. Inverse of [`serialize_record`] on valid lines;
/// unknown fields, out-of-vocabulary tags, and invariant violations are all
/// rejected.
pub fn parse_record(line: &str) -> Result<TelemetryRecord, RecordError> {
    let mut map: serde_json::Map<String, Value> =
        serde_json::from_str(line).map_err(|e| RecordError::Parse {
            offset: e.column(),
            message: e.to_string(),
        })?;

    let session_value = map
        .remove("session_id")
        .ok_or_else(|| RecordError::Schema("missing field \"session_id\"".into()))?;
    let session_id = SessionId::from_digits(
        session_value
            .as_str()
            .ok_or_else(|| RecordError::Schema("session_id must be a string".into()))?,
    )?;

    let client_ts_ms = take_u64(&mut map, "client_ts_ms")?;
    let server_ts_ms = match map.remove("server_ts_ms") {
        None => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| {
            RecordError::Schema("server_ts_ms must be a non-negative integer".into())
        })?),
    };

    let mode_tag = map
        .remove("mode")
        .and_then(|v| v.as_str().map(str::to_string))
        .ok_or_else(|| RecordError::Schema("missing or non-string field \"mode\"".into()))?;
    let mode = Mode::from_tag(&mode_tag)
        .ok_or_else(|| RecordError::Schema(format!("unknown mode {mode_tag:?}")))?;

    let reason_tag = map
        .remove("reason")
        .and_then(|v| v.as_str().map(str::to_string))
        .ok_or_else(|| RecordError::Schema("missing or non-string field \"reason\"".into()))?;
    let reason = Reason::from_tag(&reason_tag)
        .ok_or_else(|| RecordError::Schema(format!("unknown reason {reason_tag:?}")))?;

    let lines_total = take_u64(&mut map, "lines_total")?;
    let lines_edit = match map.remove("lines_edit") {
        None => return Err(RecordError::Schema("missing field \"lines_edit\"".into())),
        Some(Value::String(s)) if s == "corrupt" => EditLines::Corrupt,
        Some(Value::Number(n)) => EditLines::Lines(n.as_i64().ok_or_else(|| {
            RecordError::Schema("lines_edit must be an integer or \"corrupt\"".into())
        })?),
        Some(_) => {
            return Err(RecordError::Schema(
                "lines_edit must be an integer or \"corrupt\"".into(),
            ))
        }
    };

    let mut overall = OverallCounts::default();
    for (prefix, field) in OVERALL_KEYS {
        let counts = LocCounts {
            total: take_u64(&mut map, &format!("{prefix}.total"))?,
            in_module: take_u64(&mut map, &format!("{prefix}.module"))?,
            in_edit_range: take_u64(&mut map, &format!("{prefix}.edit"))?,
        };
        match field {
            "type_curr" => overall.type_curr = counts,
            "type_prev" => overall.type_prev = counts,
            "bg_curr" => overall.bg_curr = counts,
            _ => overall.bg_prev = counts,
        }
    }
    overall.too_complex_total = take_u64(&mut map, "overall.too_complex_total")?;

    let mut edit_kinds = EditKindCounts::new();
    let remaining: Vec<String> = map.keys().cloned().collect();
    let mut seen_kinds: BTreeMap<ErrorKind, (Option<u64>, Option<u64>)> = BTreeMap::new();
    for key in remaining {
        let rest = key
            .strip_prefix("edit_kinds.")
            .ok_or_else(|| RecordError::Schema(format!("unknown field {key:?}")))?;
        let (tag, side) = rest
            .rsplit_once('.')
            .ok_or_else(|| RecordError::Schema(format!("unknown field {key:?}")))?;
        let kind = ErrorKind::from_tag(tag)
            .ok_or_else(|| RecordError::Schema(format!("unknown error kind {tag:?}")))?;
        let value = take_u64(&mut map, &key)?;
        let entry = seen_kinds.entry(kind).or_insert((None, None));
        match side {
            "curr" => entry.0 = Some(value),
            "prev" => entry.1 = Some(value),
            _ => return Err(RecordError::Schema(format!("unknown field {key:?}"))),
        }
    }
    for (kind, (curr, prev)) in seen_kinds {
        let curr = curr.ok_or_else(|| {
            RecordError::Schema(format!("edit_kinds.{}.curr is missing", kind.tag()))
        })?;
        let prev = prev.ok_or_else(|| {
            RecordError::Schema(format!("edit_kinds.{}.prev is missing", kind.tag()))
        })?;
        if curr == 0 && prev == 0 {
            return Err(RecordError::Schema(format!(
                "edit_kinds.{} must not store a (0,0) pair",
                kind.tag()
            )));
        }
        edit_kinds.set(kind, curr, prev);
    }

    if let Some(key) = map.keys().next() {
        return Err(RecordError::Schema(format!("unknown field {key:?}")));
    }

    let record = TelemetryRecord {
        session_id,
        client_ts_ms,
        server_ts_ms,
        mode,
        reason,
        lines_total,
        lines_edit,
        overall,
        edit_kinds,
    };
    record.validate()?;
    Ok(record)
}

/// Apply the two cleaning rules to an ordered batch of ingested records:
///
/// 1. among records sharing (session_id, client_ts_ms), only the first in
///    input order survives;
/// 2. records with a negative edit range are kept, but their edit fields
///    are voided (`lines_edit` becomes the corrupt sentinel and the
///    edit-kind counters are dropped) while overall counts stay usable.
///
/// Relative order is preserved and the function is idempotent.
pub fn clean(records: impl IntoIterator<Item = TelemetryRecord>) -> Vec<TelemetryRecord> {
    let mut seen: HashSet<(SessionId, u64)> = HashSet::new();
    let mut out = Vec::new();
    for mut record in records {
        if !seen.insert((record.session_id, record.client_ts_ms)) {
            continue;
        }
        if matches!(record.lines_edit, EditLines::Lines(n) if n < 0) {
            record.lines_edit = EditLines::Corrupt;
            record.edit_kinds.clear();
        }
        out.push(record);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn zero_record() -> TelemetryRecord {
        TelemetryRecord {
            session_id: SessionId::new(42).unwrap(),
            client_ts_ms: 1_000,
            server_ts_ms: None,
            mode: Mode::Nocheck,
            reason: Reason::Keystroke,
            lines_total: 0,
            lines_edit: EditLines::Lines(0),
            overall: OverallCounts::default(),
            edit_kinds: EditKindCounts::new(),
        }
    }

    fn count_keys_with_prefix(line: &str, prefix: &str) -> usize {
        let map: serde_json::Map<String, Value> = serde_json::from_str(line).unwrap();
        map.keys().filter(|k| k.starts_with(prefix)).count()
    }

    #[test]
    fn zero_record_serializes_with_zero_too_complex_and_empty_kinds() {
        let line = serialize_record(&zero_record()).unwrap();
        assert!(line.contains("too_complex_total\":0"), "line: {line}");
        assert_eq!(count_keys_with_prefix(&line, "edit_kinds."), 0);
    }

    #[test]
    fn record_carries_13_overall_scalars_and_two_per_kind() {
        let mut record = zero_record();
        record.overall.type_curr = LocCounts::new(3, 2, 1);
        record.overall.type_prev = LocCounts::new(3, 1, 0);
        record.overall.bg_curr = LocCounts::new(9, 4, 2);
        record.overall.bg_prev = LocCounts::new(8, 4, 1);
        record.overall.too_complex_total = 1;
        record.edit_kinds.set(ErrorKind::UnknownProperty, 1, 0);
        record.edit_kinds.set(ErrorKind::TypeMismatch, 2, 2);
        let line = serialize_record(&record).unwrap();
        assert_eq!(count_keys_with_prefix(&line, "overall."), 13);
        assert_eq!(count_keys_with_prefix(&line, "edit_kinds."), 4);
    }

    #[test]
    fn invariant_violation_is_rejected_not_partially_emitted() {
        let mut record = zero_record();
        record.overall.type_curr = LocCounts::new(1, 0, 1); // edit > module
        let err = serialize_record(&record).unwrap_err();
        assert!(matches!(err, RecordError::Invariant(_)), "{err}");
    }

    #[test]
    fn parse_is_inverse_of_serialize() {
        let mut record = zero_record();
        record.server_ts_ms = Some(2_000);
        record.mode = Mode::Strict;
        record.reason = Reason::ModuleSwitch;
        record.lines_total = 120;
        record.lines_edit = EditLines::Lines(7);
        record.overall.type_curr = LocCounts::new(2, 2, 2);
        record.edit_kinds.set(ErrorKind::UnknownSymbol, 5, 3);
        let line = serialize_record(&record).unwrap();
        assert_eq!(parse_record(&line).unwrap(), record);
    }

    #[test]
    fn empty_line_is_a_parse_error() {
        assert!(matches!(
            parse_record(""),
            Err(RecordError::Parse { .. })
        ));
    }

    #[test]
    fn out_of_vocabulary_mode_is_a_schema_error() {
        let line = serialize_record(&zero_record())
            .unwrap()
            .replace("\"nocheck\"", "\"loose\"");
        assert!(matches!(parse_record(&line), Err(RecordError::Schema(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let line = serialize_record(&zero_record()).unwrap();
        let line = line.replacen('{', "{\"intruder\":1,", 1);
        let err = parse_record(&line).unwrap_err();
        assert!(matches!(err, RecordError::Schema(m) if m.contains("intruder")));
    }

    #[test]
    fn unknown_kind_tag_is_rejected() {
        let line = serialize_record(&zero_record()).unwrap();
        let line = line.replace('}', ",\"edit_kinds.Imaginary.curr\":1,\"edit_kinds.Imaginary.prev\":0}");
        let err = parse_record(&line).unwrap_err();
        assert!(matches!(err, RecordError::Schema(m) if m.contains("Imaginary")));
    }

    #[test]
    fn clean_keeps_first_of_duplicate_pairs_and_preserves_order() {
        let sid = SessionId::new(7).unwrap();
        let mut r1 = zero_record();
        r1.session_id = sid;
        r1.client_ts_ms = 1_000;
        r1.lines_total = 1;
        let mut r2 = r1.clone();
        r2.lines_total = 2; // duplicate key, different payload
        let mut r3 = r1.clone();
        r3.client_ts_ms = 1_001;
        let cleaned = clean([r1.clone(), r2, r3.clone()]);
        assert_eq!(cleaned, vec![r1, r3]);
    }

    #[test]
    fn clean_voids_negative_edit_ranges_but_keeps_overall_counts() {
        let mut record = zero_record();
        record.lines_edit = EditLines::Lines(-5);
        record.overall.type_curr = LocCounts::new(7, 3, 0);
        record.edit_kinds.set(ErrorKind::SyntaxError, 1, 0);
        let cleaned = clean([record]);
        assert_eq!(cleaned.len(), 1);
        assert_eq!(cleaned[0].lines_edit, EditLines::Corrupt);
        assert!(cleaned[0].edit_kinds.is_empty());
        assert_eq!(cleaned[0].overall.type_curr.total, 7);
    }

    #[test]
    fn clean_is_idempotent_and_total_on_empty_input() {
        assert!(clean(Vec::new()).is_empty());
        let mut record = zero_record();
        record.lines_edit = EditLines::Lines(-1);
        let once = clean([record]);
        let twice = clean(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn corrupt_sentinel_round_trips() {
        let mut record = zero_record();
        record.lines_edit = EditLines::Corrupt;
        let line = serialize_record(&record).unwrap();
        assert!(line.contains("\"lines_edit\":\"corrupt\""));
        assert_eq!(parse_record(&line).unwrap(), record);
    }

    #[test]
    fn session_id_renders_as_15_zero_padded_digits() {
        let sid = SessionId::new(12_345).unwrap();
        assert_eq!(sid.to_string(), "000000000012345");
        assert_eq!(SessionId::from_digits("000000000012345").unwrap(), sid);
        assert!(SessionId::from_digits("12345").is_err());
        assert!(SessionId::new(SESSION_ID_SPACE).is_err());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_loc_counts() -> impl Strategy<Value = LocCounts> {
        (0u64..500, 0u64..500, 0u64..500).prop_map(|(a, b, c)| {
            let mut v = [a, b, c];
            v.sort_unstable();
            LocCounts::new(v[2], v[1], v[0])
        })
    }

    fn arb_record() -> impl Strategy<Value = TelemetryRecord> {
        let header = (
            0u64..SESSION_ID_SPACE,
            0u64..2_000_000_000_000,
            proptest::option::of(0u64..2_000_000_000_000),
            0usize..3,
            prop::bool::ANY,
            0u64..100_000,
            -100i64..100_000,
        );
        let counters = (
            arb_loc_counts(),
            arb_loc_counts(),
            arb_loc_counts(),
            arb_loc_counts(),
            0u64..50,
            proptest::collection::btree_map(0usize..35, (0u64..50, 0u64..50), 0..8),
        );
        (header, counters).prop_map(
            |((sid, cts, sts, mode, key, lines, edit), (tc, tp, bc, bp, complex, kinds))| {
                let mut edit_kinds = EditKindCounts::new();
                for (idx, (curr, prev)) in kinds {
                    edit_kinds.set(ErrorKind::ALL[idx], curr, prev);
                }
                TelemetryRecord {
                    session_id: SessionId::new(sid).unwrap(),
                    client_ts_ms: cts,
                    server_ts_ms: sts,
                    mode: Mode::ALL[mode],
                    reason: if key { Reason::Keystroke } else { Reason::ModuleSwitch },
                    lines_total: lines,
                    lines_edit: EditLines::Lines(edit),
                    overall: OverallCounts {
                        type_curr: tc,
                        type_prev: tp,
                        bg_curr: bc,
                        bg_prev: bp,
                        too_complex_total: complex,
                    },
                    edit_kinds,
                }
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

        #[test]
        fn wire_round_trip(record in arb_record()) {
            let line = serialize_record(&record).unwrap();
            prop_assert_eq!(parse_record(&line).unwrap(), record);
        }

        #[test]
        fn clean_idempotent(records in proptest::collection::vec(arb_record(), 0..20)) {
            let once = clean(records);
            let twice = clean(once.clone());
            prop_assert_eq!(once, twice);
        }
    }
}
