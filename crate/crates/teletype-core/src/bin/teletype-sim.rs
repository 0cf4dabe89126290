//! Session simulator CLI: generate scenarios and replay them through the
//! telemetry client.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use teletype_core::sim::generate::{gen_random_scenario, GenParams};
use teletype_core::sim::{parse_script, run_scenario, to_script, SimConfig};

#[derive(Parser)]
#[command(name = "teletype-sim", about = "Deterministic editing-session simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario file through a real telemetry client.
    Run {
        scenario: PathBuf,
        /// Keystroke-analysis sampling rate.
        #[arg(long, default_value_t = 1.0)]
        p_event: f64,
        /// Session enrollment rate.
        #[arg(long, default_value_t = 1.0)]
        p_session: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write emitted records (wire lines) here; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the ground-truth ledger (JSON) here.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Also POST emitted records to an ingest endpoint.
        #[arg(long)]
        sink_url: Option<String>,
        /// Replay single-line edits one character at a time.
        #[arg(long)]
        per_char: bool,
        /// Simulated milliseconds between actions.
        #[arg(long, default_value_t = 120)]
        tick_ms: u64,
    },
    /// Generate a random scenario file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        modules: usize,
        #[arg(long, default_value_t = 200)]
        actions: usize,
        #[arg(long, default_value_t = 0.15)]
        typo_rate: f64,
        /// Mode probabilities as nocheck,nonstrict,strict.
        #[arg(long, default_value = "0.90,0.095,0.005")]
        mode_mix: String,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mix(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad --mode-mix: {e}"))?;
    if parts.len() != 3 || parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err("--mode-mix needs three probabilities".into());
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn post_batches(url: &str, lines: &[String]) -> Result<(), String> {
    // stay under the ingest body limit
    const BATCH_BYTES: usize = 32 * 1024;
    let agent = reqwest::blocking::Client::new();
    let mut batch = String::new();
    let flush = |batch: &mut String| -> Result<(), String> {
        if batch.is_empty() {
            return Ok(());
        }
        let response = agent
            .post(url)
            .body(std::mem::take(batch))
            .send()
            .map_err(|e| format!("post to {url} failed: {e}"))?;
        if !response.status().is_success() {
            return Err(format!("ingest endpoint returned {}", response.status()));
        }
        Ok(())
    };
    for line in lines {
        if batch.len() + line.len() + 1 > BATCH_BYTES {
            flush(&mut batch)?;
        }
        batch.push_str(line);
        batch.push('\n');
    }
    flush(&mut batch)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            scenario,
            p_event,
            p_session,
            seed,
            out,
            ledger,
            sink_url,
            per_char,
            tick_ms,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("cannot read {}: {e}", scenario.display()))?;
            let parsed = parse_script(&text, scenario.parent()).map_err(|e| e.to_string())?;
            let cfg = SimConfig {
                p_session,
                p_event,
                seed,
                per_char,
                action_tick_ms: tick_ms,
                ..SimConfig::default()
            };
            let output = run_scenario(&parsed, &cfg).map_err(|e| e.to_string())?;
            let body = output.lines.join("\n");
            match &out {
                Some(path) => std::fs::write(path, format!("{body}\n"))
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => {
                    if !body.is_empty() {
                        println!("{body}");
                    }
                }
            }
            if let Some(path) = &ledger {
                let json = serde_json::to_string_pretty(&output.ledger)
                    .expect("ledger serializes");
                std::fs::write(path, json)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            if let Some(url) = &sink_url {
                post_batches(url, &output.lines)?;
            }
            eprintln!(
                "session {} ({}): {} events, {} records emitted",
                output.ledger.session_id,
                if output.ledger.enrolled {
                    "enrolled"
                } else {
                    "not enrolled"
                },
                output.ledger.events.len(),
                output.records.len()
            );
            Ok(())
        }
        Command::Gen {
            seed,
            modules,
            actions,
            typo_rate,
            mode_mix,
            out,
        } => {
            let params = GenParams {
                n_modules: modules,
                n_actions: actions,
                mode_mix: parse_mix(&mode_mix)?,
                typo_rate,
            };
            let scenario = gen_random_scenario(seed, &params);
            let text = to_script(&scenario);
            match &out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}
