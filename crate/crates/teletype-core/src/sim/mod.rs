//! Deterministic session simulator.
//!
//! Replays a scenario's action stream through a real telemetry client on a
//! simulated clock, and logs a complete ground-truth ledger: every event's
//! full error maps, edit-range state, and emitted record. The ledger is the
//! independent oracle for the analysis tables ([`oracle`]) and supplies the
//! project-derived forbidden set for privacy audits.
//!
//! Scenarios must begin with an `open` action; edits always target the
//! focused module.

pub mod generate;
pub mod oracle;
pub mod script;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analyzer::{AnalysisBudget, Project, SourceEdit};
use crate::client::{ClientConfig, ClientEdit, ClientError, SinkConfig, TelemetryClient};
use crate::kind::{AnalysisError, ModuleId};
use crate::record::{Mode, Reason, SessionId, TelemetryRecord};
use crate::sampler::{Sampler, SamplerConfig};
pub use script::{parse_script, to_script, Action, Scenario, ScriptError};

/// Simulator configuration. Sessions default to always-enrolled so
/// scenarios emit deterministically; production rates live in the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p_session: f64,
    pub p_event: f64,
    pub seed: u64,
    /// Replay single-line edits one character at a time, so records can
    /// catch code mid-keystroke (misspelled prefixes and the like).
    pub per_char: bool,
    /// Simulated milliseconds between consecutive actions.
    pub action_tick_ms: u64,
    /// Simulated wall-clock start.
    pub base_ts_ms: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            p_session: 1.0,
            p_event: 1.0,
            seed: 0,
            per_char: false,
            action_tick_ms: 120,
            base_ts_ms: 1_700_000_000_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("action {index}: {message}")]
    Action { index: usize, message: String },
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// One simulated event: an action (or one per-character step of one) and
/// the complete analysis state after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub index: usize,
    pub substep: usize,
    pub ts_ms: u64,
    pub action: String,
    /// Record reason this event could emit; `None` for waits and opens.
    pub reason: Option<Reason>,
    /// Module a record would describe (the outgoing module for switches).
    pub focused: ModuleId,
    pub mode: Mode,
    pub analysis_ran: bool,
    pub visible_curr: BTreeMap<ModuleId, Vec<AnalysisError>>,
    pub visible_prev: BTreeMap<ModuleId, Vec<AnalysisError>>,
    pub bg_curr: BTreeMap<ModuleId, Vec<AnalysisError>>,
    pub bg_prev: BTreeMap<ModuleId, Vec<AnalysisError>>,
    /// Interval the record was built against (pre-reset) when one was
    /// emitted; the tracker state after the event otherwise.
    pub edit_range: Option<(u32, u32)>,
    pub lines_total: u64,
    pub too_complex_running: u64,
    pub emitted: Option<String>,
}

/// Complete event log for one simulated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub session_id: SessionId,
    pub enrolled: bool,
    /// Project-derived strings that must never appear in record bytes:
    /// identifiers, string literals, module ids, and asset names, from
    /// every source state the session passed through.
    pub forbidden: BTreeSet<String>,
    pub events: Vec<LedgerEvent>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub lines: Vec<String>,
    pub ledger: Ledger,
}

/// Identifiers and literals that may occur in project sources but are part
/// of the language rather than the project.
const LANGUAGE_WORDS: [&str; 11] = [
    "local", "if", "then", "end", "function", "return", "true", "false", "nil", "require", "game",
];

/// Harvest the forbidden-string candidates from project sources: every
/// identifier, string-literal body, module id, and data-model asset name.
/// Candidates that occur inside fixed wire tokens are dropped (they would
/// match every record), as are digit-only literals (indistinguishable from
/// counters).
pub fn collect_forbidden(project: &Project) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut add = |candidate: &str| {
        if candidate.is_empty()
            || LANGUAGE_WORDS.contains(&candidate)
            || candidate.bytes().all(|b| b.is_ascii_digit())
            || crate::privacy::collides_with_vocabulary(candidate)
        {
            return;
        }
        out.insert(candidate.to_string());
    };
    for (id, module) in &project.modules {
        add(id.as_str());
        for line in &module.lines {
            let code = line.split("--").next().unwrap_or("");
            let mut rest = code;
            // string literal bodies
            while let Some(open) = rest.find('"') {
                let tail = &rest[open + 1..];
                match tail.find('"') {
                    Some(close) => {
                        add(&tail[..close]);
                        rest = &tail[close + 1..];
                    }
                    None => {
                        add(tail);
                        break;
                    }
                }
            }
            // identifiers
            let mut word = String::new();
            for c in code.chars() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                } else {
                    if !word.is_empty() && !word.chars().next().unwrap().is_ascii_digit() {
                        add(&word);
                    }
                    word.clear();
                }
            }
            if !word.is_empty() && !word.chars().next().unwrap().is_ascii_digit() {
                add(&word);
            }
        }
    }
    for asset in &project.data_model {
        add(asset);
    }
    out
}

fn render_action(action: &Action) -> String {
    match action {
        Action::Open(m) => format!("open {m}"),
        Action::TypeText { module, line, .. } => format!("type {module} {line}"),
        Action::Delete {
            module,
            from_line,
            n_lines,
        } => format!("delete {module} {from_line} {n_lines}"),
        Action::SetMode { module, mode } => format!("mode {module} {mode}"),
        Action::Switch(m) => format!("switch {m}"),
        Action::Wait(ms) => format!("wait {ms}"),
    }
}

struct Runner {
    client: TelemetryClient,
    clock: u64,
    records: Vec<TelemetryRecord>,
    lines: Vec<String>,
    ledger: Ledger,
}

struct EventMeta<'a> {
    index: usize,
    substep: usize,
    action: &'a Action,
    reason: Option<Reason>,
    focused: ModuleId,
    mode: Mode,
    analysis_ran: bool,
}

impl Runner {
    fn log_event(
        &mut self,
        meta: EventMeta<'_>,
        emitted: Option<TelemetryRecord>,
    ) -> Result<(), SimError> {
        let (prev, curr) = self.client.snapshots();
        let edit_range = if emitted.is_some() {
            self.client.last_emit_range()
        } else {
            self.client.tracker().as_interval()
        };
        let line = match &emitted {
            Some(record) => {
                let line = crate::record::serialize_record(record).map_err(ClientError::from)?;
                self.records.push(record.clone());
                self.lines.push(line.clone());
                Some(line)
            }
            None => None,
        };
        self.ledger.events.push(LedgerEvent {
            index: meta.index,
            substep: meta.substep,
            ts_ms: self.clock,
            action: render_action(meta.action),
            reason: meta.reason,
            focused: meta.focused,
            mode: meta.mode,
            analysis_ran: meta.analysis_ran,
            visible_curr: curr.visible.clone(),
            visible_prev: prev.visible.clone(),
            bg_curr: curr.background.clone(),
            bg_prev: prev.background.clone(),
            edit_range,
            lines_total: self.client.project().total_lines(),
            too_complex_running: self.client.too_complex_running(),
            emitted: line,
        });
        self.ledger
            .forbidden
            .extend(collect_forbidden(self.client.project()));
        Ok(())
    }

    fn run_edit(
        &mut self,
        index: usize,
        substep: usize,
        action: &Action,
        change: SourceEdit,
    ) -> Result<(), SimError> {
        let module = self.client.current_module().clone();
        let emitted = self
            .client
            .on_edit(&ClientEdit { module: module.clone(), change }, self.clock)
            .map_err(|e| SimError::Action {
                index,
                message: e.to_string(),
            })?;
        let mode = self.client.current_mode();
        self.log_event(
            EventMeta {
                index,
                substep,
                action,
                reason: Some(Reason::Keystroke),
                focused: module,
                mode,
                analysis_ran: true,
            },
            emitted,
        )
    }
}

/// Replay a scenario through a real client. With `p_event = 1` every edit
/// analysis emits a record, so ledger events and records correspond 1:1.
pub fn run_scenario(scenario: &Scenario, cfg: &SimConfig) -> Result<RunOutput, SimError> {
    let sampler_cfg = SamplerConfig {
        p_session: cfg.p_session,
        p_event: cfg.p_event,
        seed: cfg.seed,
    };
    if scenario.actions.is_empty() {
        let (enrolled, session_id) = Sampler::new(sampler_cfg)
            .map_err(ClientError::from)?
            .enroll_session();
        return Ok(RunOutput {
            records: Vec::new(),
            lines: Vec::new(),
            ledger: Ledger {
                session_id,
                enrolled,
                forbidden: collect_forbidden(&scenario.project),
                events: Vec::new(),
            },
        });
    }

    let Action::Open(first) = &scenario.actions[0] else {
        return Err(SimError::Action {
            index: 0,
            message: "scenario must start with an open action".into(),
        });
    };
    let client = TelemetryClient::new(
        scenario.project.clone(),
        first,
        &ClientConfig {
            sampler: sampler_cfg,
            sink: SinkConfig::Memory,
        },
        AnalysisBudget::default(),
    )?;
    let mut runner = Runner {
        ledger: Ledger {
            session_id: client.session_id(),
            enrolled: client.enrolled(),
            forbidden: collect_forbidden(&scenario.project),
            events: Vec::new(),
        },
        client,
        clock: cfg.base_ts_ms,
        records: Vec::new(),
        lines: Vec::new(),
    };

    for (index, action) in scenario.actions.iter().enumerate() {
        runner.clock += cfg.action_tick_ms;
        match action {
            Action::Open(module) => {
                if index != 0 {
                    return Err(SimError::Action {
                        index,
                        message: "open is only valid as the first action".into(),
                    });
                }
                let mode = runner.client.current_mode();
                runner.log_event(
                    EventMeta {
                        index,
                        substep: 0,
                        action,
                        reason: None,
                        focused: module.clone(),
                        mode,
                        analysis_ran: true,
                    },
                    None,
                )?;
            }
            Action::Wait(ms) => {
                runner.clock += ms;
                let focused = runner.client.current_module().clone();
                let mode = runner.client.current_mode();
                runner.log_event(
                    EventMeta {
                        index,
                        substep: 0,
                        action,
                        reason: None,
                        focused,
                        mode,
                        analysis_ran: false,
                    },
                    None,
                )?;
            }
            Action::Switch(target) => {
                let outgoing = runner.client.current_module().clone();
                let mode = runner.client.current_mode();
                let emitted = runner
                    .client
                    .on_module_switch(target, runner.clock)
                    .map_err(|e| SimError::Action {
                        index,
                        message: e.to_string(),
                    })?;
                runner.log_event(
                    EventMeta {
                        index,
                        substep: 0,
                        action,
                        reason: Some(Reason::ModuleSwitch),
                        focused: outgoing,
                        mode,
                        analysis_ran: false,
                    },
                    emitted,
                )?;
            }
            Action::TypeText { module, line, text } => {
                check_focus(&runner, index, module)?;
                let doc_len = runner.client.project().modules[module].line_count() as u32;
                let blocks: Vec<String> = text.split('\n').map(str::to_string).collect();
                if cfg.per_char && blocks.len() == 1 && !blocks[0].is_empty() && *line <= doc_len {
                    // keystroke-level replay: grow the line one character at
                    // a time, one analysis per character
                    let chars: Vec<char> = blocks[0].chars().collect();
                    for step in 1..=chars.len() {
                        if step > 1 {
                            runner.clock += cfg.action_tick_ms;
                        }
                        let prefix: String = chars[..step].iter().collect();
                        runner.run_edit(
                            index,
                            step - 1,
                            action,
                            SourceEdit::Replace {
                                from_line: *line,
                                lines: vec![prefix],
                            },
                        )?;
                    }
                } else {
                    let change = if *line <= doc_len + 1 {
                        SourceEdit::Replace {
                            from_line: *line,
                            lines: blocks,
                        }
                    } else {
                        // typing far past the end pads with blank lines
                        let mut lines = vec![String::new(); (*line - doc_len - 1) as usize];
                        lines.extend(blocks);
                        SourceEdit::Insert {
                            at_line: doc_len + 1,
                            lines,
                        }
                    };
                    runner.run_edit(index, 0, action, change)?;
                }
            }
            Action::Delete {
                module,
                from_line,
                n_lines,
            } => {
                check_focus(&runner, index, module)?;
                runner.run_edit(
                    index,
                    0,
                    action,
                    SourceEdit::Delete {
                        from_line: *from_line,
                        n_lines: *n_lines,
                    },
                )?;
            }
            Action::SetMode { module, mode } => {
                check_focus(&runner, index, module)?;
                let pragma = crate::analyzer::pragma_line(*mode);
                let has_pragma = runner.client.project().modules[module].has_pragma_line();
                let change = if has_pragma {
                    SourceEdit::Replace {
                        from_line: 1,
                        lines: vec![pragma],
                    }
                } else {
                    SourceEdit::Insert {
                        at_line: 1,
                        lines: vec![pragma],
                    }
                };
                runner.run_edit(index, 0, action, change)?;
            }
        }
    }

    Ok(RunOutput {
        records: runner.records,
        lines: runner.lines,
        ledger: runner.ledger,
    })
}

fn check_focus(runner: &Runner, index: usize, module: &ModuleId) -> Result<(), SimError> {
    if runner.client.current_module() == module {
        Ok(())
    } else {
        Err(SimError::Action {
            index,
            message: format!(
                "edit targets {module} but focus is {}",
                runner.client.current_module()
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kind::ErrorKind;

    /// The two worked example programs, typed as whole blocks so the edit
    /// range covers them, with a pragma upgrade in between.
    pub(crate) fn worked_example_scenario() -> Scenario {
        let text = "module main nonstrict\n\
            open main\n\
            type main 2 local x = { p = 5, q = nil }\\nif condition then x.q = 7 end\\nlocal y = x.p + x.q\\nlocal z = x.r\n\
            type main 1 --!strict\\nlocal x = { p = 5, q = nil }\\nif condition then x.q = 7 end\\nlocal y = x.p + x.q\\nlocal z = x.r\n";
        parse_script(text, None).unwrap()
    }

    #[test]
    fn worked_example_records_show_the_mode_upgrade_effect() {
        let out = run_scenario(&worked_example_scenario(), &SimConfig::default()).unwrap();
        assert_eq!(out.records.len(), 2);
        let first = &out.records[0];
        assert_eq!(first.mode, Mode::Nonstrict);
        assert_eq!(first.edit_kinds.get(ErrorKind::UnknownProperty), (1, 0));
        assert_eq!(first.edit_kinds.get(ErrorKind::TypeMismatch), (0, 0));
        let second = &out.records[1];
        assert_eq!(second.mode, Mode::Strict);
        assert_eq!(second.edit_kinds.get(ErrorKind::TypeMismatch), (1, 0));
        assert_eq!(second.edit_kinds.get(ErrorKind::UnknownProperty), (1, 1));
    }

    #[test]
    fn empty_scenario_yields_no_records_and_a_bare_ledger() {
        let scenario = Scenario::default();
        let out = run_scenario(&scenario, &SimConfig::default()).unwrap();
        assert!(out.records.is_empty());
        assert!(out.ledger.events.is_empty());
    }

    #[test]
    fn per_char_replay_surfaces_mid_edit_misspellings() {
        let text = "module main nonstrict\n\
            line main local bucket = { fish = 1 }\n\
            open main\n\
            type main 3 local c = bucket.fish\n";
        let scenario = parse_script(text, None).unwrap();
        let cfg = SimConfig {
            per_char: false,
            ..SimConfig::default()
        };
        let whole = run_scenario(&scenario, &cfg).unwrap();
        // typing the whole line at once never shows a misspelled prefix
        assert!(whole.records.iter().all(|r| r
            .edit_kinds
            .get(ErrorKind::UnknownSymbol)
            == (0, 0)));

        let text_replace = "module main nonstrict\n\
            line main local bucket = { fish = 1 }\n\
            line main local c = 0\n\
            open main\n\
            type main 3 local c = bucket.fish\n";
        let scenario = parse_script(text_replace, None).unwrap();
        let cfg = SimConfig {
            per_char: true,
            ..SimConfig::default()
        };
        let out = run_scenario(&scenario, &cfg).unwrap();
        assert!(out.records.len() > 10, "one record per keystroke");
        let saw_unknown_symbol = out
            .records
            .iter()
            .any(|r| r.edit_kinds.get(ErrorKind::UnknownSymbol).0 > 0);
        assert!(saw_unknown_symbol, "mid-edit prefix like `buck` must surface");
    }

    #[test]
    fn switch_records_always_emit_even_with_zero_event_rate() {
        let text = "module one nocheck\nmodule two strict\nopen one\ntype one 2 local a = 1\nswitch two\n";
        let scenario = parse_script(text, None).unwrap();
        let cfg = SimConfig {
            p_event: 0.0,
            ..SimConfig::default()
        };
        let out = run_scenario(&scenario, &cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].reason, Reason::ModuleSwitch);
        assert_eq!(out.records[0].mode, Mode::Nocheck, "outgoing module mode");
    }

    #[test]
    fn ledger_events_cover_every_action_and_carry_timestamps() {
        let out = run_scenario(&worked_example_scenario(), &SimConfig::default()).unwrap();
        assert_eq!(out.ledger.events.len(), 3);
        assert!(out
            .ledger
            .events
            .windows(2)
            .all(|w| w[0].ts_ms < w[1].ts_ms));
        assert!(out.ledger.enrolled);
    }

    #[test]
    fn forbidden_set_covers_identifiers_literals_and_assets() {
        let text = "module main nonstrict\n\
            line main local playerScore = \"SecretLevel\"\n\
            asset FogLantern\n\
            open main\n";
        let scenario = parse_script(text, None).unwrap();
        let out = run_scenario(&scenario, &SimConfig::default()).unwrap();
        for needle in ["playerScore", "SecretLevel", "FogLantern", "main"] {
            assert!(
                out.ledger.forbidden.contains(needle),
                "missing {needle:?} in {:?}",
                out.ledger.forbidden
            );
        }
        assert!(!out.ledger.forbidden.contains("local"));
    }

    #[test]
    fn zero_event_rate_suppresses_keystroke_records_entirely() {
        let cfg = SimConfig {
            p_event: 0.0,
            ..SimConfig::default()
        };
        let out = run_scenario(&worked_example_scenario(), &cfg).unwrap();
        assert!(out.records.is_empty(), "no switches, so no records at all");
        assert_eq!(out.ledger.events.len(), 3, "state still advances");
    }

    #[test]
    fn consecutive_records_chain_previous_to_current_totals() {
        // with every analysis sampled and no focus changes, each record's
        // previous-analysis counters continue the one before it
        let text = "module main nonstrict\n\
            open main\n\
            type main 2 local t = { hp = 1 }\n\
            type main 3 local a = t.mp\n\
            type main 4 local b = t.sp\n\
            type main 3 local a = t.hp\n";
        let scenario = parse_script(text, None).unwrap();
        let out = run_scenario(&scenario, &SimConfig::default()).unwrap();
        assert_eq!(out.records.len(), 4);
        for pair in out.records.windows(2) {
            assert_eq!(
                pair[1].overall.type_prev.total,
                pair[0].overall.type_curr.total
            );
            assert_eq!(
                pair[1].overall.type_prev.in_module,
                pair[0].overall.type_curr.in_module
            );
            assert_eq!(
                pair[1].overall.bg_prev.total,
                pair[0].overall.bg_curr.total
            );
        }
        // and the error churn is visible: 0 -> 1 -> 2 -> 1 visible errors
        let totals: Vec<u64> = out
            .records
            .iter()
            .map(|r| r.overall.type_curr.total)
            .collect();
        assert_eq!(totals, vec![0, 1, 2, 1]);
    }

    #[test]
    fn scenario_errors_carry_the_action_index() {
        let text = "module one nocheck\nmodule two nocheck\nopen one\ntype two 2 local a = 1\n";
        let scenario = parse_script(text, None).unwrap();
        let err = run_scenario(&scenario, &SimConfig::default()).unwrap_err();
        match err {
            SimError::Action { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn deterministic_replay_under_fixed_seed() {
        let scenario = worked_example_scenario();
        let a = run_scenario(&scenario, &SimConfig::default()).unwrap();
        let b = run_scenario(&scenario, &SimConfig::default()).unwrap();
        assert_eq!(a.lines, b.lines);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn generated_scenarios_replay_cleanly() {
        use crate::sim::generate::{gen_random_scenario, GenParams};
        let params = GenParams {
            n_modules: 5,
            n_actions: 60,
            ..GenParams::default()
        };
        for seed in 0..4u64 {
            let scenario = gen_random_scenario(seed, &params);
            let out = run_scenario(&scenario, &SimConfig::default()).unwrap();
            assert!(!out.records.is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn typo_rate_zero_never_produces_unknown_symbol() {
        use crate::sim::generate::{gen_random_scenario, GenParams};
        let params = GenParams {
            n_modules: 5,
            n_actions: 120,
            typo_rate: 0.0,
            ..GenParams::default()
        };
        for seed in 0..4u64 {
            let scenario = gen_random_scenario(seed, &params);
            let out = run_scenario(&scenario, &SimConfig::default()).unwrap();
            for event in &out.ledger.events {
                for errors in event.visible_curr.values().chain(event.bg_curr.values()) {
                    assert!(
                        errors.iter().all(|e| e.kind != ErrorKind::UnknownSymbol),
                        "seed {seed}: unbound name leaked into {errors:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn mode_mix_matches_three_sigma_multinomial_bounds() {
        use crate::sim::generate::{gen_random_scenario, GenParams};
        let n = 10_000usize;
        let mix = [0.90, 0.095, 0.005];
        let scenario = gen_random_scenario(
            424242,
            &GenParams {
                n_modules: n,
                n_actions: 0,
                mode_mix: mix,
                typo_rate: 0.1,
            },
        );
        let mut counts = [0usize; 3];
        for module in scenario.project.modules.values() {
            counts[module.pragma_mode().rank() as usize] += 1;
        }
        for (i, p) in mix.iter().enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let observed = counts[i] as f64 / n as f64;
            assert!(
                (observed - p).abs() <= 3.0 * sigma,
                "mode {i}: observed {observed} expected {p} +- {}",
                3.0 * sigma
            );
        }
    }
}
