//! Analysis CLI: reproduce the summary tables from a record store.
//!
//! The store is a wire-format file or a directory of `records-*.jsonl` day
//! files. Exit code 2 signals a schema error in the store.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use teletype_core::metrics::{self, svg};
use teletype_core::record::{clean, parse_record, Mode, TelemetryRecord};

#[derive(Parser)]
#[command(
    name = "teletype-analyze",
    about = "Summary tables over a telemetry record store"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Record store: a .jsonl file or a directory of records-*.jsonl files.
    #[arg(long, global = true, default_value = "store")]
    store: PathBuf,
    /// Apply deduplication and corrupt-edit voiding before analysis.
    #[arg(long, global = true)]
    cleaned: bool,
    /// Timezone offset for hour bucketing, in minutes.
    #[arg(long, global = true, default_value_t = 0)]
    tz_offset_min: i64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write an SVG plot alongside the table, where supported.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Mode filter for error-popularity.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_tag(s).ok_or_else(|| format!("unknown mode {s:?} (nocheck|nonstrict|strict)"))
}

#[derive(Subcommand)]
enum Command {
    /// Histogram of records per hour.
    RecordsPerHour,
    /// Distributions of codebase and edit-range sizes.
    SizeStats,
    /// Session length in seconds and records.
    SessionStats,
    /// Current errors by location (project / module / edit range).
    ErrorLocation,
    /// Mode usage per record and session, plus transition counts.
    ModeDistribution,
    /// Error-count deltas across mode upgrades and downgrades.
    TransitionEffect,
    /// Error volume grouped by mode.
    ErrorsByMode,
    /// Per-kind edit-range increase/preserve/decrease counts.
    EditDeltaByKind,
    /// Kind popularity ranking for one mode (requires --mode).
    ErrorPopularity,
    /// Error-density change over session-relative time.
    DensityDeltas,
    /// In-module error deltas between the last two analyses.
    ModuleDeltaBreakdown,
}

fn load_store(path: &Path) -> Result<Vec<TelemetryRecord>, String> {
    let mut files = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| format!("cannot read store dir {}: {e}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("records-") && n.ends_with(".jsonl"))
            })
            .collect();
        entries.sort();
        files.extend(entries);
    } else {
        files.push(path.to_path_buf());
    }
    let mut records = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file)
            .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            records
                .push(parse_record(line).map_err(|e| format!("{}:{}: {e}", file.display(), idx + 1))?);
        }
    }
    Ok(records)
}

fn emit<T: serde::Serialize>(format: Format, table: &T, csv: String) {
    match format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(table).expect("tables serialize")
        ),
    }
}

fn write_plot(path: &Path, content: String) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn no_plot(cli: &Cli) -> Result<(), String> {
    match &cli.plot {
        Some(_) => Err("this subcommand does not support --plot".into()),
        None => Ok(()),
    }
}

fn run(cli: &Cli, records: &[TelemetryRecord]) -> Result<(), String> {
    let tz = cli.tz_offset_min;
    match &cli.command {
        Command::RecordsPerHour => {
            let table = metrics::records_per_hour(records, tz);
            if let Some(path) = &cli.plot {
                let series: Vec<(String, f64)> = table
                    .buckets
                    .iter()
                    .map(|b| (b.hour_start_ms.to_string(), b.count as f64))
                    .collect();
                write_plot(path, svg::bar_chart("records per hour", &series))?;
            }
            emit(cli.format, &table, table.to_csv());
        }
        Command::SizeStats => {
            no_plot(cli)?;
            let table = metrics::size_stats(records);
            emit(cli.format, &table, table.to_csv());
        }
        Command::SessionStats => {
            no_plot(cli)?;
            let table = metrics::session_stats(records);
            emit(cli.format, &table, table.to_csv());
        }
        Command::ErrorLocation => {
            no_plot(cli)?;
            let table = metrics::error_location_breakdown(records);
            emit(cli.format, &table, table.to_csv());
        }
        Command::ModeDistribution => {
            let table = metrics::mode_distribution(records);
            if let Some(path) = &cli.plot {
                let series: Vec<(String, f64)> = table
                    .record_counts
                    .iter()
                    .map(|(mode, count, _)| (mode.tag().to_string(), *count as f64))
                    .collect();
                write_plot(path, svg::bar_chart("records per mode", &series))?;
            }
            emit(cli.format, &table, table.to_csv());
        }
        Command::TransitionEffect => {
            no_plot(cli)?;
            let table = metrics::transition_effect(records);
            emit(cli.format, &table, table.to_csv());
        }
        Command::ErrorsByMode => {
            let table = metrics::errors_by_mode(records);
            if let Some(path) = &cli.plot {
                let mut series = Vec::new();
                for row in &table.rows {
                    series.push((format!("type/{}", row.mode.tag()), row.type_total as f64));
                    series.push((format!("bg/{}", row.mode.tag()), row.bg_total as f64));
                }
                write_plot(path, svg::bar_chart("errors by mode", &series))?;
            }
            emit(cli.format, &table, table.to_csv());
        }
        Command::EditDeltaByKind => {
            no_plot(cli)?;
            let table = metrics::edit_delta_by_kind(records);
            emit(cli.format, &table, table.to_csv());
        }
        Command::ErrorPopularity => {
            no_plot(cli)?;
            let mode = cli
                .mode
                .ok_or_else(|| "error-popularity requires --mode".to_string())?;
            let table = metrics::error_popularity(records, mode);
            emit(cli.format, &table, table.to_csv());
        }
        Command::DensityDeltas => {
            let table = metrics::density_deltas(records);
            if let Some(path) = &cli.plot {
                let panels: Vec<(String, Vec<(f64, f64)>)> = Mode::ALL
                    .iter()
                    .map(|&mode| {
                        (
                            mode.tag().to_string(),
                            table
                                .points
                                .iter()
                                .filter(|pt| pt.mode == mode)
                                .map(|pt| (pt.t_rel_s, pt.delta_density))
                                .collect(),
                        )
                    })
                    .collect();
                write_plot(
                    path,
                    svg::scatter_panels("error density change over time", &panels),
                )?;
            }
            emit(cli.format, &table, table.to_csv());
        }
        Command::ModuleDeltaBreakdown => {
            let table = metrics::module_delta_breakdown(records);
            if let Some(path) = &cli.plot {
                let series: Vec<(String, f64)> = table
                    .rows
                    .iter()
                    .flat_map(|r| {
                        [
                            (format!("{}/{}/up", r.analysis, r.mode.tag()), r.increase as f64),
                            (format!("{}/{}/eq", r.analysis, r.mode.tag()), r.preserve as f64),
                            (
                                format!("{}/{}/down", r.analysis, r.mode.tag()),
                                r.decrease as f64,
                            ),
                        ]
                    })
                    .collect();
                write_plot(path, svg::bar_chart("in-module error deltas", &series))?;
            }
            emit(cli.format, &table, table.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let records = match load_store(&cli.store) {
        Ok(records) => records,
        Err(message) => {
            eprintln!("store error: {message}");
            return ExitCode::from(2);
        }
    };
    let records = if cli.cleaned { clean(records) } else { records };
    match run(&cli, &records) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}
