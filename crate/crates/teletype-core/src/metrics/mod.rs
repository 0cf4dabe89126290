//! Analysis operations over a (cleaned) record store.
//!
//! Every operation is a pure function over a record slice; grouping into
//! sessions sorts by client timestamp but otherwise preserves input order,
//! so results are invariant under record reorderings that keep per-session
//! order.
//!
//! Mode-transition detection works without module identity (records never
//! carry one): a switch always emits a record, so two adjacent keystroke
//! records are known to describe the same focused module. An upgrade is
//! such a pair whose mode strengthens, a downgrade the reverse, and a
//! switch-to-different-mode is a module-switch record whose mode differs
//! from its predecessor's.

pub mod svg;
pub mod tables;

use std::collections::BTreeMap;

use crate::kind::ErrorKind;
use crate::record::{Mode, Reason, SessionId, TelemetryRecord};
use tables::*;

/// Records of one session, sorted by client timestamp (stable).
fn sessions(records: &[TelemetryRecord]) -> BTreeMap<SessionId, Vec<&TelemetryRecord>> {
    let mut map: BTreeMap<SessionId, Vec<&TelemetryRecord>> = BTreeMap::new();
    for record in records {
        map.entry(record.session_id).or_default().push(record);
    }
    for group in map.values_mut() {
        group.sort_by_key(|r| r.client_ts_ms);
    }
    map
}

fn pct(part: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| 100.0 * part as f64 / total as f64)
}

/// Histogram of records per hour. `tz_offset_min` shifts bucket boundaries
/// to a local timezone; bucket starts are reported in that shifted scale.
pub fn records_per_hour(records: &[TelemetryRecord], tz_offset_min: i64) -> HourHistogram {
    const HOUR_MS: i64 = 3_600_000;
    let mut buckets: BTreeMap<i64, u64> = BTreeMap::new();
    for record in records {
        let shifted = record.bucket_ts_ms() as i64 + tz_offset_min * 60_000;
        *buckets.entry(shifted.div_euclid(HOUR_MS) * HOUR_MS).or_default() += 1;
    }
    HourHistogram {
        buckets: buckets
            .into_iter()
            .map(|(hour_start_ms, count)| HourBucket {
                hour_start_ms,
                count,
            })
            .collect(),
    }
}

/// Codebase-size distributions. Corrupt (or negative) edit ranges are
/// excluded from the edit-range distribution only.
pub fn size_stats(records: &[TelemetryRecord]) -> SizeStats {
    let lines_total: Vec<f64> = records.iter().map(|r| r.lines_total as f64).collect();
    let lines_edit: Vec<f64> = records
        .iter()
        .filter_map(|r| r.lines_edit.usable().map(|n| n as f64))
        .collect();
    SizeStats {
        lines_total: DistStats::from_values(&lines_total),
        lines_edit: DistStats::from_values(&lines_edit),
    }
}

/// Session-size distributions: wall-clock span in seconds and record count.
pub fn session_stats(records: &[TelemetryRecord]) -> SessionStats {
    let mut spans = Vec::new();
    let mut counts = Vec::new();
    for group in sessions(records).values() {
        let first = group.first().expect("groups are non-empty").client_ts_ms;
        let last = group.last().unwrap().client_ts_ms;
        spans.push((last - first) as f64 / 1000.0);
        counts.push(group.len() as f64);
    }
    SessionStats {
        time_span_s: DistStats::from_values(&spans),
        record_count: DistStats::from_values(&counts),
    }
}

/// Sums of current-error location counters across all records.
pub fn error_location_breakdown(records: &[TelemetryRecord]) -> LocationBreakdown {
    let mut rows = Vec::new();
    for (analysis, pick) in [
        ("type", (|r: &TelemetryRecord| r.overall.type_curr) as fn(&TelemetryRecord) -> _),
        ("bg", |r: &TelemetryRecord| r.overall.bg_curr),
    ] {
        let mut total = 0;
        let mut in_module = 0;
        let mut in_edit = 0;
        for record in records {
            let counts = pick(record);
            total += counts.total;
            in_module += counts.in_module;
            in_edit += counts.in_edit_range;
        }
        rows.push(LocationRow {
            analysis,
            total,
            in_module,
            in_module_pct: pct(in_module, total),
            in_edit,
            in_edit_pct: pct(in_edit, total),
        });
    }
    LocationBreakdown { rows }
}

/// Adjacent-pair transitions within one session group. A switch record
/// describes the outgoing module, so a focus change to a differently-moded
/// module surfaces as a switch record followed by a record with another
/// mode; an in-place upgrade or downgrade surfaces as two adjacent
/// keystroke records (a switch between them would have emitted a record).
fn transitions(group: &[&TelemetryRecord]) -> (Vec<i64>, Vec<i64>, u64) {
    let mut upgrade_deltas = Vec::new();
    let mut downgrade_deltas = Vec::new();
    let mut switch_changes = 0;
    for pair in group.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.reason == Reason::ModuleSwitch {
            if a.mode != b.mode {
                switch_changes += 1;
            }
            continue;
        }
        if b.reason == Reason::Keystroke && a.mode != b.mode {
            let delta = b.overall.type_curr.total as i64 - a.overall.type_curr.total as i64;
            if b.mode.rank() > a.mode.rank() {
                upgrade_deltas.push(delta);
            } else {
                downgrade_deltas.push(delta);
            }
        }
    }
    (upgrade_deltas, downgrade_deltas, switch_changes)
}

/// Mode usage per record and per session, plus transition counts.
pub fn mode_distribution(records: &[TelemetryRecord]) -> ModeDistribution {
    let mut per_mode: BTreeMap<Mode, u64> = BTreeMap::new();
    for record in records {
        *per_mode.entry(record.mode).or_default() += 1;
    }
    let total_records = records.len() as u64;
    let record_counts = Mode::ALL
        .iter()
        .map(|mode| {
            let count = per_mode.get(mode).copied().unwrap_or(0);
            (*mode, count, pct(count, total_records))
        })
        .collect();

    let groups = sessions(records);
    let total_sessions = groups.len() as u64;
    let mut pure = BTreeMap::from([(Mode::Nocheck, 0u64), (Mode::Nonstrict, 0), (Mode::Strict, 0)]);
    let mut mixed = 0u64;
    let mut upgrades = 0u64;
    let mut downgrades = 0u64;
    let mut switch_mode_changes = 0u64;
    for group in groups.values() {
        let mut modes: Vec<Mode> = group.iter().map(|r| r.mode).collect();
        modes.sort_unstable();
        modes.dedup();
        if modes.len() == 1 {
            *pure.get_mut(&modes[0]).unwrap() += 1;
        } else {
            mixed += 1;
        }
        let (up, down, switches) = transitions(group);
        upgrades += up.len() as u64;
        downgrades += down.len() as u64;
        switch_mode_changes += switches;
    }
    let session_classes = vec![
        (
            "pure_nocheck".to_string(),
            pure[&Mode::Nocheck],
            pct(pure[&Mode::Nocheck], total_sessions),
        ),
        (
            "pure_nonstrict".to_string(),
            pure[&Mode::Nonstrict],
            pct(pure[&Mode::Nonstrict], total_sessions),
        ),
        (
            "pure_strict".to_string(),
            pure[&Mode::Strict],
            pct(pure[&Mode::Strict], total_sessions),
        ),
        ("mixed".to_string(), mixed, pct(mixed, total_sessions)),
    ];
    ModeDistribution {
        record_counts,
        session_classes,
        upgrades,
        downgrades,
        switch_mode_changes,
    }
}

/// Effect of mode transitions on current visible error totals.
pub fn transition_effect(records: &[TelemetryRecord]) -> TransitionEffect {
    let mut up = Vec::new();
    let mut down = Vec::new();
    for group in sessions(records).values() {
        let (u, d, _) = transitions(group);
        up.extend(u);
        down.extend(d);
    }
    let summarize = |deltas: &[i64], upgrade: bool| {
        let values: Vec<f64> = deltas.iter().map(|&d| d as f64).collect();
        TransitionStats {
            count: deltas.len() as u64,
            stats: DistStats::from_values(&values),
            extreme: if upgrade {
                deltas.iter().max().copied()
            } else {
                deltas.iter().min().copied()
            },
        }
    };
    TransitionEffect {
        upgrades: summarize(&up, true),
        downgrades: summarize(&down, false),
    }
}

/// Visible/background error volume by mode, with per-mode median background
/// count.
pub fn errors_by_mode(records: &[TelemetryRecord]) -> ErrorsByMode {
    let type_grand: u64 = records.iter().map(|r| r.overall.type_curr.total).sum();
    let bg_grand: u64 = records.iter().map(|r| r.overall.bg_curr.total).sum();
    let rows = Mode::ALL
        .iter()
        .map(|&mode| {
            let of_mode: Vec<&TelemetryRecord> =
                records.iter().filter(|r| r.mode == mode).collect();
            let type_total: u64 = of_mode.iter().map(|r| r.overall.type_curr.total).sum();
            let bg_total: u64 = of_mode.iter().map(|r| r.overall.bg_curr.total).sum();
            let bg_counts: Vec<f64> = of_mode
                .iter()
                .map(|r| r.overall.bg_curr.total as f64)
                .collect();
            ModeErrorRow {
                mode,
                type_total,
                type_share_pct: pct(type_total, type_grand),
                bg_total,
                bg_share_pct: pct(bg_total, bg_grand),
                bg_median: DistStats::from_values(&bg_counts).map(|s| s.median),
            }
        })
        .collect();
    ErrorsByMode { rows }
}

/// Per-kind edit-range deltas: increase / preserve-nonzero / decrease.
/// Keystroke records only; corrupt edit data is skipped; kinds absent from
/// a record count as (0, 0) and contribute nothing.
pub fn edit_delta_by_kind(records: &[TelemetryRecord]) -> EditDeltaTable {
    let mut cells: BTreeMap<(ErrorKind, Mode), (u64, u64, u64)> = BTreeMap::new();
    for record in records {
        if record.reason != Reason::Keystroke || record.lines_edit.usable().is_none() {
            continue;
        }
        for (kind, (curr, prev)) in record.edit_kinds.iter() {
            let cell = cells.entry((kind, record.mode)).or_default();
            if curr > prev {
                cell.0 += 1;
            } else if curr < prev {
                cell.2 += 1;
            } else if curr > 0 {
                cell.1 += 1;
            }
        }
    }
    let rows = cells
        .into_iter()
        .filter(|(_, (up, eq, down))| up + eq + down > 0)
        .map(|((kind, mode), (increase, preserve, decrease))| EditDeltaRow {
            kind,
            mode,
            increase,
            preserve,
            decrease,
        })
        .collect();
    EditDeltaTable { rows }
}

/// Kind popularity for one mode: share of current edit-range counts over
/// all records (keystroke and module-switch alike), ranked descending.
pub fn error_popularity(records: &[TelemetryRecord], mode: Mode) -> PopularityTable {
    let mut counts: BTreeMap<ErrorKind, u64> = BTreeMap::new();
    for record in records.iter().filter(|r| r.mode == mode) {
        for (kind, (curr, _)) in record.edit_kinds.iter() {
            *counts.entry(kind).or_default() += curr;
        }
    }
    let grand: u64 = counts.values().sum();
    let mut ranked: Vec<(ErrorKind, u64)> = counts
        .into_iter()
        .filter(|(_, count)| *count > 0)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.tag().cmp(b.0.tag())));
    let rows = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (kind, count))| PopularityRow {
            rank: i + 1,
            kind,
            count,
            share_pct: 100.0 * count as f64 / grand as f64,
        })
        .collect();
    PopularityTable { mode, rows }
}

/// Per-record change in error density over session-relative time.
/// Keystroke records with a nonzero line count only.
pub fn density_deltas(records: &[TelemetryRecord]) -> DensityTable {
    let mut points = Vec::new();
    for group in sessions(records).values() {
        let first_ts = group.first().expect("non-empty").client_ts_ms;
        for record in group {
            if record.reason != Reason::Keystroke || record.lines_total == 0 {
                continue;
            }
            let delta = record.overall.type_curr.total as i64 - record.overall.type_prev.total as i64;
            points.push(DensityPoint {
                session_id: record.session_id,
                mode: record.mode,
                t_rel_s: (record.client_ts_ms - first_ts) as f64 / 1000.0,
                delta_density: delta as f64 / record.lines_total as f64,
            });
        }
    }
    DensityTable { points }
}

/// In-module error-count deltas between the last two analyses, per analysis
/// and mode. Keystroke records only; "preserve" requires equal and nonzero.
pub fn module_delta_breakdown(records: &[TelemetryRecord]) -> ModuleDeltaTable {
    let mut rows = Vec::new();
    for (analysis, curr_of, prev_of) in [
        (
            "type",
            (|r: &TelemetryRecord| r.overall.type_curr.in_module) as fn(&TelemetryRecord) -> u64,
            (|r: &TelemetryRecord| r.overall.type_prev.in_module) as fn(&TelemetryRecord) -> u64,
        ),
        (
            "bg",
            |r: &TelemetryRecord| r.overall.bg_curr.in_module,
            |r: &TelemetryRecord| r.overall.bg_prev.in_module,
        ),
    ] {
        for &mode in &Mode::ALL {
            let mut increase = 0;
            let mut preserve = 0;
            let mut decrease = 0;
            for record in records {
                if record.reason != Reason::Keystroke || record.mode != mode {
                    continue;
                }
                let (curr, prev) = (curr_of(record), prev_of(record));
                if curr > prev {
                    increase += 1;
                } else if curr < prev {
                    decrease += 1;
                } else if curr > 0 {
                    preserve += 1;
                }
            }
            let sum = increase + preserve + decrease;
            rows.push(ModuleDeltaRow {
                analysis,
                mode,
                increase,
                increase_pct: pct(increase, sum),
                preserve,
                preserve_pct: pct(preserve, sum),
                decrease,
                decrease_pct: pct(decrease, sum),
            });
        }
    }
    ModuleDeltaTable { rows }
}

/// Every table at once, as produced by the analysis operations.
pub fn compute_bundle(records: &[TelemetryRecord], tz_offset_min: i64) -> TableBundle {
    TableBundle {
        records_per_hour: records_per_hour(records, tz_offset_min),
        size_stats: size_stats(records),
        session_stats: session_stats(records),
        error_location: error_location_breakdown(records),
        mode_distribution: mode_distribution(records),
        transition_effect: transition_effect(records),
        errors_by_mode: errors_by_mode(records),
        edit_delta: edit_delta_by_kind(records),
        popularity: Mode::ALL
            .iter()
            .map(|&mode| error_popularity(records, mode))
            .collect(),
        density: density_deltas(records),
        module_delta: module_delta_breakdown(records),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{EditKindCounts, EditLines, LocCounts, OverallCounts};

    pub(crate) fn record(
        session: u64,
        ts: u64,
        mode: Mode,
        reason: Reason,
    ) -> TelemetryRecord {
        TelemetryRecord {
            session_id: SessionId::new(session).unwrap(),
            client_ts_ms: ts,
            server_ts_ms: None,
            mode,
            reason,
            lines_total: 100,
            lines_edit: EditLines::Lines(5),
            overall: OverallCounts::default(),
            edit_kinds: EditKindCounts::new(),
        }
    }

    #[test]
    fn empty_store_produces_empty_tables() {
        assert!(records_per_hour(&[], 0).buckets.is_empty());
        assert!(size_stats(&[]).lines_total.is_none());
        assert!(session_stats(&[]).time_span_s.is_none());
        assert_eq!(transition_effect(&[]).upgrades.count, 0);
        assert!(error_popularity(&[], Mode::Nonstrict).rows.is_empty());
        assert!(density_deltas(&[]).points.is_empty());
    }

    #[test]
    fn five_records_in_one_hour_is_one_bucket() {
        let records: Vec<TelemetryRecord> = (0..5)
            .map(|i| record(1, 3_600_000 + i * 60_000, Mode::Nocheck, Reason::Keystroke))
            .collect();
        let hist = records_per_hour(&records, 0);
        assert_eq!(hist.buckets.len(), 1);
        assert_eq!(hist.buckets[0].count, 5);
        assert_eq!(hist.buckets[0].hour_start_ms, 3_600_000);
    }

    #[test]
    fn timezone_offset_shifts_bucket_boundaries() {
        let records = vec![record(1, 3_600_000, Mode::Nocheck, Reason::Keystroke)];
        let utc = records_per_hour(&records, 0);
        let shifted = records_per_hour(&records, -30);
        assert_eq!(utc.buckets[0].hour_start_ms, 3_600_000);
        assert_eq!(shifted.buckets[0].hour_start_ms, 0);
    }

    #[test]
    fn single_record_size_stats_degenerate() {
        let records = vec![record(1, 0, Mode::Nocheck, Reason::Keystroke)];
        let stats = size_stats(&records).lines_total.unwrap();
        assert_eq!(stats.mean, 100.0);
        assert_eq!(stats.median, 100.0);
        assert_eq!(stats.p99, 100.0);
        assert_eq!(stats.stddev, 0.0);
    }

    #[test]
    fn corrupt_edit_records_count_for_lines_but_not_edit_range() {
        let mut corrupt = record(1, 0, Mode::Nocheck, Reason::Keystroke);
        corrupt.lines_edit = EditLines::Corrupt;
        let records = vec![corrupt, record(1, 1, Mode::Nocheck, Reason::Keystroke)];
        let stats = size_stats(&records);
        assert_eq!(stats.lines_total.unwrap().count, 2);
        assert_eq!(stats.lines_edit.unwrap().count, 1);
    }

    #[test]
    fn session_span_is_first_to_last_in_seconds() {
        let records = vec![
            record(1, 0, Mode::Nocheck, Reason::Keystroke),
            record(1, 845_000, Mode::Nocheck, Reason::Keystroke),
            record(2, 50, Mode::Strict, Reason::Keystroke),
        ];
        let stats = session_stats(&records);
        let spans = stats.time_span_s.unwrap();
        assert_eq!(spans.count, 2);
        assert_eq!(spans.p99, 845.0);
        let counts = stats.record_count.unwrap();
        assert_eq!(counts.median, 1.0);
        assert_eq!(counts.p99, 2.0);
    }

    #[test]
    fn location_breakdown_matches_hand_arithmetic() {
        let mut r = record(1, 0, Mode::Nonstrict, Reason::Keystroke);
        r.overall.type_curr = LocCounts::new(10, 5, 1);
        let table = error_location_breakdown(&[r]);
        let type_row = &table.rows[0];
        assert_eq!(type_row.total, 10);
        assert_eq!(type_row.in_module_pct, Some(50.0));
        assert_eq!(type_row.in_edit_pct, Some(10.0));
        let bg_row = &table.rows[1];
        assert_eq!(bg_row.total, 0);
        assert_eq!(bg_row.in_module_pct, None);
    }

    #[test]
    fn pure_and_mixed_session_classification() {
        let records = vec![
            record(1, 0, Mode::Nonstrict, Reason::Keystroke),
            record(1, 10, Mode::Nonstrict, Reason::Keystroke),
            record(2, 0, Mode::Strict, Reason::Keystroke),
            record(2, 10, Mode::Nocheck, Reason::Keystroke),
        ];
        let dist = mode_distribution(&records);
        let class: BTreeMap<&str, u64> = dist
            .session_classes
            .iter()
            .map(|(k, v, _)| (k.as_str(), *v))
            .collect();
        assert_eq!(class["pure_nonstrict"], 1);
        assert_eq!(class["mixed"], 1);
        assert_eq!(dist.downgrades, 1);
        assert_eq!(dist.upgrades, 0);
    }

    #[test]
    fn switch_records_are_transition_context_not_transitions() {
        // strict module, switch (record carries the outgoing strict mode),
        // then a keystroke in a nocheck module: a focus change, not a
        // downgrade
        let records = vec![
            record(1, 0, Mode::Strict, Reason::Keystroke),
            record(1, 10, Mode::Strict, Reason::ModuleSwitch),
            record(1, 20, Mode::Nocheck, Reason::Keystroke),
        ];
        let dist = mode_distribution(&records);
        assert_eq!(dist.downgrades, 0, "switch breaks keystroke adjacency");
        assert_eq!(dist.switch_mode_changes, 1);
    }

    #[test]
    fn transition_deltas_and_extremes() {
        let mut a = record(1, 0, Mode::Nocheck, Reason::Keystroke);
        a.overall.type_curr = LocCounts::new(2, 0, 0);
        let mut b = record(1, 10, Mode::Strict, Reason::Keystroke);
        b.overall.type_curr = LocCounts::new(5, 0, 0);
        let effect = transition_effect(&[a, b]);
        assert_eq!(effect.upgrades.count, 1);
        assert_eq!(effect.upgrades.extreme, Some(3));
        assert_eq!(effect.downgrades.count, 0);
        assert!(effect.downgrades.stats.is_none());
    }

    #[test]
    fn errors_by_mode_shares() {
        let mut r = record(1, 0, Mode::Nonstrict, Reason::Keystroke);
        r.overall.type_curr = LocCounts::new(4, 0, 0);
        let table = errors_by_mode(&[r]);
        let nonstrict = &table.rows[1];
        assert_eq!(nonstrict.type_share_pct, Some(100.0));
        assert_eq!(table.rows[0].type_share_pct, Some(0.0));
    }

    #[test]
    fn edit_delta_categorization_matches_the_four_cases() {
        let make = |curr: u64, prev: u64| {
            let mut r = record(1, curr * 10 + prev, Mode::Nonstrict, Reason::Keystroke);
            r.edit_kinds.set(ErrorKind::UnknownProperty, curr, prev);
            r
        };
        // (1,0) -> increase, (2,2) -> preserve, (0,1) -> decrease, (0,0) -> nothing
        let records = vec![make(1, 0), make(2, 2), make(0, 1), make(0, 0)];
        let table = edit_delta_by_kind(&records);
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_eq!((row.increase, row.preserve, row.decrease), (1, 1, 1));
    }

    #[test]
    fn popularity_ranks_by_share() {
        let mut r = record(1, 0, Mode::Nonstrict, Reason::Keystroke);
        r.edit_kinds.set(ErrorKind::UnknownSymbol, 3, 0);
        r.edit_kinds.set(ErrorKind::TypeMismatch, 1, 0);
        let table = error_popularity(&[r], Mode::Nonstrict);
        assert_eq!(table.rows[0].kind, ErrorKind::UnknownSymbol);
        assert_eq!(table.rows[0].share_pct, 75.0);
        assert_eq!(table.rows[1].share_pct, 25.0);
        assert!(error_popularity(&[], Mode::Strict).rows.is_empty());
    }

    #[test]
    fn density_deltas_use_relative_time_and_line_normalization() {
        let mut a = record(1, 1_000, Mode::Nonstrict, Reason::Keystroke);
        a.overall.type_curr = LocCounts::new(7, 0, 0);
        a.overall.type_prev = LocCounts::new(4, 0, 0);
        let mut b = record(1, 3_000, Mode::Nonstrict, Reason::Keystroke);
        b.overall.type_curr = LocCounts::new(5, 0, 0);
        b.overall.type_prev = LocCounts::new(5, 0, 0);
        let table = density_deltas(&[a, b]);
        assert_eq!(table.points.len(), 2);
        assert_eq!(table.points[0].t_rel_s, 0.0);
        assert_eq!(table.points[0].delta_density, 0.03);
        assert_eq!(table.points[1].t_rel_s, 2.0);
        assert_eq!(table.points[1].delta_density, 0.0);
    }

    #[test]
    fn module_delta_excludes_zero_zero_and_requires_nonzero_preserve() {
        let make = |prev: u64, curr: u64, ts: u64| {
            let mut r = record(1, ts, Mode::Strict, Reason::Keystroke);
            r.overall.type_curr = LocCounts::new(curr, curr, 0);
            r.overall.type_prev = LocCounts::new(prev, prev, 0);
            r
        };
        let records = vec![make(2, 3, 0), make(0, 0, 1), make(1, 1, 2), make(3, 1, 3)];
        let table = module_delta_breakdown(&records);
        let row = table
            .rows
            .iter()
            .find(|r| r.analysis == "type" && r.mode == Mode::Strict)
            .unwrap();
        assert_eq!((row.increase, row.preserve, row.decrease), (1, 1, 1));
        assert_eq!(row.increase_pct, Some(100.0 / 3.0));
    }
}
