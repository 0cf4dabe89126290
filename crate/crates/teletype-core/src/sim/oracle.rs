//! Ground-truth recomputation of every analysis table from a ledger.
//!
//! This is the differential-testing twin of [`crate::metrics`]: the same
//! table types, computed by separate single-pass code working from the
//! ledger's raw error lists instead of record counters. Overlap tests here
//! enumerate lines explicitly rather than using the tracker's interval
//! arithmetic.
//!
//! Meaningful only for ledgers produced with `p_event = 1`, where emitted
//! records and edit analyses correspond 1:1.

use std::collections::BTreeMap;

use crate::kind::{AnalysisError, ErrorKind, ModuleId};
use crate::metrics::tables::{
    DistStats, EditDeltaRow, EditDeltaTable, ErrorsByMode, HourBucket, HourHistogram,
    LocationBreakdown, LocationRow, ModeDistribution, ModeErrorRow, ModuleDeltaRow,
    ModuleDeltaTable, PopularityRow, PopularityTable, SessionStats, SizeStats, TableBundle,
    TransitionEffect, TransitionStats, DensityPoint, DensityTable,
};
use crate::record::{
    EditKindCounts, EditLines, LocCounts, Mode, OverallCounts, Reason, TelemetryRecord,
};
use crate::sim::{Ledger, LedgerEvent};

/// Line-by-line overlap check, the brute-force counterpart of the
/// tracker's interval intersection.
fn overlaps_brute(err: &AnalysisError, range: Option<(u32, u32)>) -> bool {
    let Some((a, b)) = range else {
        return false;
    };
    (err.start_line..=err.end_line).any(|line| line >= a && line <= b)
}

fn count_all(map: &BTreeMap<ModuleId, Vec<AnalysisError>>) -> u64 {
    map.values().map(|v| v.len() as u64).sum()
}

fn count_in_module(map: &BTreeMap<ModuleId, Vec<AnalysisError>>, module: &ModuleId) -> u64 {
    map.get(module).map(|v| v.len() as u64).unwrap_or(0)
}

fn count_overlaps(
    map: &BTreeMap<ModuleId, Vec<AnalysisError>>,
    module: &ModuleId,
    range: Option<(u32, u32)>,
) -> u64 {
    map.get(module)
        .map(|errors| errors.iter().filter(|e| overlaps_brute(e, range)).count() as u64)
        .unwrap_or(0)
}

fn overlap_kinds(
    map: &BTreeMap<ModuleId, Vec<AnalysisError>>,
    module: &ModuleId,
    range: Option<(u32, u32)>,
) -> BTreeMap<ErrorKind, u64> {
    let mut out = BTreeMap::new();
    for err in map.get(module).map(Vec::as_slice).unwrap_or(&[]) {
        if overlaps_brute(err, range) {
            *out.entry(err.kind).or_default() += 1;
        }
    }
    out
}

fn loc(
    map: &BTreeMap<ModuleId, Vec<AnalysisError>>,
    module: &ModuleId,
    range: Option<(u32, u32)>,
) -> LocCounts {
    LocCounts {
        total: count_all(map),
        in_module: count_in_module(map, module),
        in_edit_range: count_overlaps(map, module, range),
    }
}

/// Rebuild the record an emitting event must have produced, from ground
/// truth alone. Used to verify ledger completeness.
pub fn reconstruct_record(ledger: &Ledger, event: &LedgerEvent) -> Option<TelemetryRecord> {
    let reason = event.reason?;
    let module = &event.focused;
    let range = event.edit_range;
    let mut edit_kinds = EditKindCounts::new();
    let curr = overlap_kinds(&event.visible_curr, module, range);
    let prev = overlap_kinds(&event.visible_prev, module, range);
    for kind in ErrorKind::ALL {
        edit_kinds.set(
            kind,
            curr.get(&kind).copied().unwrap_or(0),
            prev.get(&kind).copied().unwrap_or(0),
        );
    }
    Some(TelemetryRecord {
        session_id: ledger.session_id,
        client_ts_ms: event.ts_ms,
        server_ts_ms: None,
        mode: event.mode,
        reason,
        lines_total: event.lines_total,
        lines_edit: EditLines::Lines(range.map(|(a, b)| (b - a + 1) as i64).unwrap_or(0)),
        overall: OverallCounts {
            type_curr: loc(&event.visible_curr, module, range),
            type_prev: loc(&event.visible_prev, module, range),
            bg_curr: loc(&event.bg_curr, module, range),
            bg_prev: loc(&event.bg_prev, module, range),
            too_complex_total: event.too_complex_running,
        },
        edit_kinds,
    })
}

/// The emitting events, in order.
fn emitting(ledger: &Ledger) -> Vec<&LedgerEvent> {
    ledger
        .events
        .iter()
        .filter(|e| e.emitted.is_some())
        .collect()
}

/// Compute the full table bundle from ground truth.
pub fn oracle_metrics(ledger: &Ledger, tz_offset_min: i64) -> TableBundle {
    let events = emitting(ledger);

    // records per hour: one session, no server stamps, so client time rules
    const HOUR_MS: i64 = 3_600_000;
    let mut hour_counts: BTreeMap<i64, u64> = BTreeMap::new();
    for event in &events {
        let shifted = event.ts_ms as i64 + tz_offset_min * 60_000;
        *hour_counts
            .entry(shifted.div_euclid(HOUR_MS) * HOUR_MS)
            .or_default() += 1;
    }
    let records_per_hour = HourHistogram {
        buckets: hour_counts
            .into_iter()
            .map(|(hour_start_ms, count)| HourBucket {
                hour_start_ms,
                count,
            })
            .collect(),
    };

    // size distributions
    let lines_total: Vec<f64> = events.iter().map(|e| e.lines_total as f64).collect();
    let lines_edit: Vec<f64> = events
        .iter()
        .map(|e| e.edit_range.map(|(a, b)| (b - a + 1) as f64).unwrap_or(0.0))
        .collect();
    let size_stats = SizeStats {
        lines_total: DistStats::from_values(&lines_total),
        lines_edit: DistStats::from_values(&lines_edit),
    };

    // session span: one session per ledger
    let session_stats = if events.is_empty() {
        SessionStats {
            time_span_s: None,
            record_count: None,
        }
    } else {
        let first = events.first().unwrap().ts_ms;
        let last = events.last().unwrap().ts_ms;
        SessionStats {
            time_span_s: DistStats::from_values(&[(last - first) as f64 / 1000.0]),
            record_count: DistStats::from_values(&[events.len() as f64]),
        }
    };

    // location breakdown, recounted from raw error lists
    let mut rows = Vec::new();
    for (analysis, pick) in [
        (
            "type",
            (|e: &LedgerEvent| &e.visible_curr) as fn(&LedgerEvent) -> &BTreeMap<_, _>,
        ),
        ("bg", |e: &LedgerEvent| &e.bg_curr),
    ] {
        let mut total = 0;
        let mut in_module = 0;
        let mut in_edit = 0;
        for event in &events {
            let map = pick(event);
            total += count_all(map);
            in_module += count_in_module(map, &event.focused);
            in_edit += count_overlaps(map, &event.focused, event.edit_range);
        }
        rows.push(LocationRow {
            analysis,
            total,
            in_module,
            in_module_pct: share(in_module, total),
            in_edit,
            in_edit_pct: share(in_edit, total),
        });
    }
    let error_location = LocationBreakdown { rows };

    // mode usage and transitions
    let total_records = events.len() as u64;
    let mut per_mode: BTreeMap<Mode, u64> = BTreeMap::new();
    for event in &events {
        *per_mode.entry(event.mode).or_default() += 1;
    }
    let record_counts = Mode::ALL
        .iter()
        .map(|mode| {
            let count = per_mode.get(mode).copied().unwrap_or(0);
            (*mode, count, share(count, total_records))
        })
        .collect();
    let mut distinct: Vec<Mode> = events.iter().map(|e| e.mode).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let sessions_total = if events.is_empty() { 0 } else { 1u64 };
    let class_of = |mode: Mode| {
        if distinct.len() == 1 && distinct[0] == mode {
            1u64
        } else {
            0
        }
    };
    let mixed = if distinct.len() > 1 { 1u64 } else { 0 };
    let session_classes = vec![
        (
            "pure_nocheck".to_string(),
            class_of(Mode::Nocheck),
            share(class_of(Mode::Nocheck), sessions_total),
        ),
        (
            "pure_nonstrict".to_string(),
            class_of(Mode::Nonstrict),
            share(class_of(Mode::Nonstrict), sessions_total),
        ),
        (
            "pure_strict".to_string(),
            class_of(Mode::Strict),
            share(class_of(Mode::Strict), sessions_total),
        ),
        ("mixed".to_string(), mixed, share(mixed, sessions_total)),
    ];
    let mut upgrades = Vec::new();
    let mut downgrades = Vec::new();
    let mut switch_mode_changes = 0u64;
    for pair in events.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.reason == Some(Reason::ModuleSwitch) {
            if a.mode != b.mode {
                switch_mode_changes += 1;
            }
            continue;
        }
        if b.reason == Some(Reason::Keystroke) && a.mode != b.mode {
            let delta = count_all(&b.visible_curr) as i64 - count_all(&a.visible_curr) as i64;
            if b.mode.rank() > a.mode.rank() {
                upgrades.push(delta);
            } else {
                downgrades.push(delta);
            }
        }
    }
    let mode_distribution = ModeDistribution {
        record_counts,
        session_classes,
        upgrades: upgrades.len() as u64,
        downgrades: downgrades.len() as u64,
        switch_mode_changes,
    };
    let transition_effect = TransitionEffect {
        upgrades: TransitionStats {
            count: upgrades.len() as u64,
            stats: DistStats::from_values(&upgrades.iter().map(|&d| d as f64).collect::<Vec<_>>()),
            extreme: upgrades.iter().max().copied(),
        },
        downgrades: TransitionStats {
            count: downgrades.len() as u64,
            stats: DistStats::from_values(
                &downgrades.iter().map(|&d| d as f64).collect::<Vec<_>>(),
            ),
            extreme: downgrades.iter().min().copied(),
        },
    };

    // errors by mode
    let type_grand: u64 = events.iter().map(|e| count_all(&e.visible_curr)).sum();
    let bg_grand: u64 = events.iter().map(|e| count_all(&e.bg_curr)).sum();
    let errors_by_mode = ErrorsByMode {
        rows: Mode::ALL
            .iter()
            .map(|&mode| {
                let of_mode: Vec<&&LedgerEvent> =
                    events.iter().filter(|e| e.mode == mode).collect();
                let type_total: u64 = of_mode.iter().map(|e| count_all(&e.visible_curr)).sum();
                let bg_total: u64 = of_mode.iter().map(|e| count_all(&e.bg_curr)).sum();
                let bg_counts: Vec<f64> = of_mode
                    .iter()
                    .map(|e| count_all(&e.bg_curr) as f64)
                    .collect();
                ModeErrorRow {
                    mode,
                    type_total,
                    type_share_pct: share(type_total, type_grand),
                    bg_total,
                    bg_share_pct: share(bg_total, bg_grand),
                    bg_median: DistStats::from_values(&bg_counts).map(|s| s.median),
                }
            })
            .collect(),
    };

    // per-kind edit deltas and popularity, recounted from error lists
    let mut delta_cells: BTreeMap<(ErrorKind, Mode), (u64, u64, u64)> = BTreeMap::new();
    let mut popularity_counts: BTreeMap<(Mode, ErrorKind), u64> = BTreeMap::new();
    for event in &events {
        let curr = overlap_kinds(&event.visible_curr, &event.focused, event.edit_range);
        for (kind, count) in &curr {
            *popularity_counts.entry((event.mode, *kind)).or_default() += count;
        }
        if event.reason != Some(Reason::Keystroke) {
            continue;
        }
        let prev = overlap_kinds(&event.visible_prev, &event.focused, event.edit_range);
        let mut kinds: Vec<ErrorKind> = curr.keys().chain(prev.keys()).copied().collect();
        kinds.sort_unstable();
        kinds.dedup();
        for kind in kinds {
            let c = curr.get(&kind).copied().unwrap_or(0);
            let p = prev.get(&kind).copied().unwrap_or(0);
            let cell = delta_cells.entry((kind, event.mode)).or_default();
            if c > p {
                cell.0 += 1;
            } else if c < p {
                cell.2 += 1;
            } else if c > 0 {
                cell.1 += 1;
            }
        }
    }
    let edit_delta = EditDeltaTable {
        rows: delta_cells
            .into_iter()
            .filter(|(_, (up, eq, down))| up + eq + down > 0)
            .map(|((kind, mode), (increase, preserve, decrease))| EditDeltaRow {
                kind,
                mode,
                increase,
                preserve,
                decrease,
            })
            .collect(),
    };
    let popularity = Mode::ALL
        .iter()
        .map(|&mode| {
            let mut ranked: Vec<(ErrorKind, u64)> = popularity_counts
                .iter()
                .filter(|((m, _), count)| *m == mode && **count > 0)
                .map(|((_, kind), count)| (*kind, *count))
                .collect();
            let grand: u64 = ranked.iter().map(|(_, c)| c).sum();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.tag().cmp(b.0.tag())));
            PopularityTable {
                mode,
                rows: ranked
                    .into_iter()
                    .enumerate()
                    .map(|(i, (kind, count))| PopularityRow {
                        rank: i + 1,
                        kind,
                        count,
                        share_pct: 100.0 * count as f64 / grand as f64,
                    })
                    .collect(),
            }
        })
        .collect();

    // density over session-relative time
    let mut density_points = Vec::new();
    if let Some(first) = events.first() {
        let first_ts = first.ts_ms;
        for event in &events {
            if event.reason != Some(Reason::Keystroke) || event.lines_total == 0 {
                continue;
            }
            let delta =
                count_all(&event.visible_curr) as i64 - count_all(&event.visible_prev) as i64;
            density_points.push(DensityPoint {
                session_id: ledger.session_id,
                mode: event.mode,
                t_rel_s: (event.ts_ms - first_ts) as f64 / 1000.0,
                delta_density: delta as f64 / event.lines_total as f64,
            });
        }
    }
    let density = DensityTable {
        points: density_points,
    };

    // in-module deltas
    let mut module_rows = Vec::new();
    for (analysis, curr_of, prev_of) in [
        (
            "type",
            (|e: &LedgerEvent| &e.visible_curr) as fn(&LedgerEvent) -> &BTreeMap<_, _>,
            (|e: &LedgerEvent| &e.visible_prev) as fn(&LedgerEvent) -> &BTreeMap<_, _>,
        ),
        (
            "bg",
            |e: &LedgerEvent| &e.bg_curr,
            |e: &LedgerEvent| &e.bg_prev,
        ),
    ] {
        for &mode in &Mode::ALL {
            let mut increase = 0;
            let mut preserve = 0;
            let mut decrease = 0;
            for event in &events {
                if event.reason != Some(Reason::Keystroke) || event.mode != mode {
                    continue;
                }
                let curr = count_in_module(curr_of(event), &event.focused);
                let prev = count_in_module(prev_of(event), &event.focused);
                if curr > prev {
                    increase += 1;
                } else if curr < prev {
                    decrease += 1;
                } else if curr > 0 {
                    preserve += 1;
                }
            }
            let sum = increase + preserve + decrease;
            module_rows.push(ModuleDeltaRow {
                analysis,
                mode,
                increase,
                increase_pct: share(increase, sum),
                preserve,
                preserve_pct: share(preserve, sum),
                decrease,
                decrease_pct: share(decrease, sum),
            });
        }
    }
    let module_delta = ModuleDeltaTable { rows: module_rows };

    TableBundle {
        records_per_hour,
        size_stats,
        session_stats,
        error_location,
        mode_distribution,
        transition_effect,
        errors_by_mode,
        edit_delta,
        popularity,
        density,
        module_delta,
    }
}

fn share(part: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| 100.0 * part as f64 / total as f64)
}
