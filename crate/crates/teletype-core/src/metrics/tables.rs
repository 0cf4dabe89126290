//! Table types shared by the analysis operations and the simulator oracle,
//! plus their CSV renderings.
//!
//! Rendering rules (both producers go through these, so equal tables render
//! to identical bytes): floats print with four decimals, percentages with
//! two, densities with six; undefined values print as `n/a`. Percentages
//! are always `100 * part / total` computed in f64 from exact integer
//! sums.

use serde::Serialize;

use crate::kind::ErrorKind;
use crate::record::{Mode, SessionId};

/// Mean, population standard deviation, and nearest-rank order statistics
/// of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistStats {
    pub count: u64,
    pub mean: f64,
    pub stddev: f64,
    pub median: f64,
    pub p99: f64,
}

impl DistStats {
    /// `None` on an empty sample. Median and p99 use the nearest-rank rule
    /// on the sorted sample: value at index `ceil(q * n)` (1-based).
    pub fn from_values(values: &[f64]) -> Option<DistStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaNs in samples"));
        let nearest_rank = |q: f64| {
            let rank = (q * n).ceil().max(1.0) as usize;
            sorted[rank.min(sorted.len()) - 1]
        };
        Some(DistStats {
            count: values.len() as u64,
            mean,
            stddev: var.sqrt(),
            median: nearest_rank(0.50),
            p99: nearest_rank(0.99),
        })
    }
}

pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    v.map(|p| format!("{p:.2}")).unwrap_or_else(|| "n/a".into())
}

fn fmt_stats(stats: &Option<DistStats>) -> String {
    match stats {
        Some(s) => format!(
            "{},{},{},{},{}",
            s.count,
            fmt_float(s.mean),
            fmt_float(s.stddev),
            fmt_float(s.median),
            fmt_float(s.p99)
        ),
        None => "0,n/a,n/a,n/a,n/a".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourBucket {
    pub hour_start_ms: i64,
    pub count: u64,
}

/// Records per hour, bucketed on the ingestion timestamp (client timestamp
/// for never-ingested records) shifted by the requested timezone offset.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HourHistogram {
    pub buckets: Vec<HourBucket>,
}

impl HourHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hour_start_ms,count\n");
        for b in &self.buckets {
            out.push_str(&format!("{},{}\n", b.hour_start_ms, b.count));
        }
        out
    }
}

/// Distributions of codebase size and edit-range size across records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeStats {
    pub lines_total: Option<DistStats>,
    pub lines_edit: Option<DistStats>,
}

impl SizeStats {
    pub fn to_csv(&self) -> String {
        format!(
            "metric,count,mean,stddev,median,p99\nlines_total,{}\nlines_edit,{}\n",
            fmt_stats(&self.lines_total),
            fmt_stats(&self.lines_edit)
        )
    }
}

/// Session length in seconds and in records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionStats {
    pub time_span_s: Option<DistStats>,
    pub record_count: Option<DistStats>,
}

impl SessionStats {
    pub fn to_csv(&self) -> String {
        format!(
            "metric,count,mean,stddev,median,p99\ntime_span_s,{}\nrecord_count,{}\n",
            fmt_stats(&self.time_span_s),
            fmt_stats(&self.record_count)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRow {
    pub analysis: &'static str,
    pub total: u64,
    pub in_module: u64,
    pub in_module_pct: Option<f64>,
    pub in_edit: u64,
    pub in_edit_pct: Option<f64>,
}

/// Where current errors sit: project-wide, in the focused module, in the
/// edit range; for the visible and background analyses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationBreakdown {
    pub rows: Vec<LocationRow>,
}

impl LocationBreakdown {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("analysis,total,in_module,in_module_pct,in_edit,in_edit_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.analysis,
                r.total,
                r.in_module,
                fmt_opt_pct(r.in_module_pct),
                r.in_edit,
                fmt_opt_pct(r.in_edit_pct)
            ));
        }
        out
    }
}

/// Mode shares per record and per session, plus transition counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDistribution {
    pub record_counts: Vec<(Mode, u64, Option<f64>)>,
    /// (label, count, pct): pure_nocheck, pure_nonstrict, pure_strict, mixed.
    pub session_classes: Vec<(String, u64, Option<f64>)>,
    pub upgrades: u64,
    pub downgrades: u64,
    pub switch_mode_changes: u64,
}

impl ModeDistribution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,count,pct\n");
        for (mode, count, pct) in &self.record_counts {
            out.push_str(&format!(
                "records,{},{},{}\n",
                mode.tag(),
                count,
                fmt_opt_pct(*pct)
            ));
        }
        for (label, count, pct) in &self.session_classes {
            out.push_str(&format!("sessions,{label},{count},{}\n", fmt_opt_pct(*pct)));
        }
        out.push_str(&format!("transitions,upgrade,{},\n", self.upgrades));
        out.push_str(&format!("transitions,downgrade,{},\n", self.downgrades));
        out.push_str(&format!(
            "transitions,switch_mode_change,{},\n",
            self.switch_mode_changes
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionStats {
    pub count: u64,
    pub stats: Option<DistStats>,
    /// Worst-case effect: the largest increase for upgrades, the largest
    /// decrease for downgrades.
    pub extreme: Option<i64>,
}

/// Change in current visible error totals across mode transitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEffect {
    pub upgrades: TransitionStats,
    pub downgrades: TransitionStats,
}

impl TransitionEffect {
    pub fn to_csv(&self) -> String {
        let row = |label: &str, t: &TransitionStats| {
            format!(
                "{label},{},{}\n",
                fmt_stats(&t.stats),
                t.extreme.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into())
            )
        };
        format!(
            "direction,count,mean,stddev,median,p99,extreme\n{}{}",
            row("upgrade", &self.upgrades),
            row("downgrade", &self.downgrades)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeErrorRow {
    pub mode: Mode,
    pub type_total: u64,
    pub type_share_pct: Option<f64>,
    pub bg_total: u64,
    pub bg_share_pct: Option<f64>,
    pub bg_median: Option<f64>,
}

/// Visible and background error volume grouped by mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorsByMode {
    pub rows: Vec<ModeErrorRow>,
}

impl ErrorsByMode {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("mode,type_total,type_share_pct,bg_total,bg_share_pct,bg_median\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.mode.tag(),
                r.type_total,
                fmt_opt_pct(r.type_share_pct),
                r.bg_total,
                fmt_opt_pct(r.bg_share_pct),
                r.bg_median
                    .map(fmt_float)
                    .unwrap_or_else(|| "n/a".into())
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditDeltaRow {
    pub kind: ErrorKind,
    pub mode: Mode,
    pub increase: u64,
    pub preserve: u64,
    pub decrease: u64,
}

/// Per-kind, per-mode counts of records whose edit-range occurrences of a
/// kind went up, stayed at the same nonzero level, or went down.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EditDeltaTable {
    pub rows: Vec<EditDeltaRow>,
}

impl EditDeltaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,mode,increase,preserve,decrease\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.kind.tag(),
                r.mode.tag(),
                r.increase,
                r.preserve,
                r.decrease
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityRow {
    pub rank: usize,
    pub kind: ErrorKind,
    pub count: u64,
    pub share_pct: f64,
}

/// Error kinds ranked by their share of current edit-range counts for one
/// mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityTable {
    pub mode: Mode,
    pub rows: Vec<PopularityRow>,
}

impl PopularityTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,kind,count,share_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.rank,
                r.kind.tag(),
                r.count,
                format_args!("{:.2}", r.share_pct)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub session_id: SessionId,
    pub mode: Mode,
    pub t_rel_s: f64,
    pub delta_density: f64,
}

/// Per-record change in error density over session-relative time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DensityTable {
    pub points: Vec<DensityPoint>,
}

impl DensityTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("session_id,mode,t_rel_s,delta_density\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                p.session_id,
                p.mode.tag(),
                fmt_float(p.t_rel_s),
                p.delta_density
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleDeltaRow {
    pub analysis: &'static str,
    pub mode: Mode,
    pub increase: u64,
    pub increase_pct: Option<f64>,
    pub preserve: u64,
    pub preserve_pct: Option<f64>,
    pub decrease: u64,
    pub decrease_pct: Option<f64>,
}

/// How often edits increase, maintain (nonzero), or decrease in-module
/// error counts, per analysis and mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleDeltaTable {
    pub rows: Vec<ModuleDeltaRow>,
}

impl ModuleDeltaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "analysis,mode,increase,increase_pct,preserve,preserve_pct,decrease,decrease_pct\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.analysis,
                r.mode.tag(),
                r.increase,
                fmt_opt_pct(r.increase_pct),
                r.preserve,
                fmt_opt_pct(r.preserve_pct),
                r.decrease,
                fmt_opt_pct(r.decrease_pct)
            ));
        }
        out
    }
}

/// All analysis tables for one store, in one place. The analysis
/// operations and the simulator's ground-truth oracle each fill one of
/// these; byte-comparing the CSV bundles is the equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableBundle {
    pub records_per_hour: HourHistogram,
    pub size_stats: SizeStats,
    pub session_stats: SessionStats,
    pub error_location: LocationBreakdown,
    pub mode_distribution: ModeDistribution,
    pub transition_effect: TransitionEffect,
    pub errors_by_mode: ErrorsByMode,
    pub edit_delta: EditDeltaTable,
    /// One ranking per mode, in mode order.
    pub popularity: Vec<PopularityTable>,
    pub density: DensityTable,
    pub module_delta: ModuleDeltaTable,
}

impl TableBundle {
    pub fn csv_bundle(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("records_per_hour".to_string(), self.records_per_hour.to_csv()),
            ("size_stats".to_string(), self.size_stats.to_csv()),
            ("session_stats".to_string(), self.session_stats.to_csv()),
            ("error_location".to_string(), self.error_location.to_csv()),
            (
                "mode_distribution".to_string(),
                self.mode_distribution.to_csv(),
            ),
            (
                "transition_effect".to_string(),
                self.transition_effect.to_csv(),
            ),
            ("errors_by_mode".to_string(), self.errors_by_mode.to_csv()),
            ("edit_delta_by_kind".to_string(), self.edit_delta.to_csv()),
        ];
        for table in &self.popularity {
            out.push((
                format!("error_popularity_{}", table.mode.tag()),
                table.to_csv(),
            ));
        }
        out.push(("density_deltas".to_string(), self.density.to_csv()));
        out.push((
            "module_delta_breakdown".to_string(),
            self.module_delta.to_csv(),
        ));
        out
    }
}
