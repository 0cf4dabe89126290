//! Per-session telemetry client.
//!
//! The client owns the project sources, re-analyzes dirty modules on every
//! edit, keeps the last two full analysis snapshots (visible and
//! background), tracks the edit range, and assembles records. Keystroke
//! records are emitted under the event-level sampling coin; module-switch
//! records are always emitted, for the outgoing module, so mode changes can
//! be told apart from focus changes downstream.
//!
//! Record construction sees only error kinds, spans, counts, and line
//! totals. Source text never reaches this path; the privacy audit checks
//! that end to end.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;

use crate::analyzer::{AnalysisBudget, AnalyzerError, Project, ProjectState, SourceEdit};
use crate::edit_range::EditRange;
use crate::kind::{AnalysisError, ModuleId};
use crate::record::{
    serialize_record, EditKindCounts, EditLines, LocCounts, Mode, OverallCounts, Reason,
    RecordError, SessionId, TelemetryRecord,
};
use crate::sampler::{BadProbability, Sampler, SamplerConfig};

use std::collections::BTreeMap;

/// Where emitted records go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkConfig {
    /// Append wire lines to a file.
    File(PathBuf),
    /// POST wire lines to an ingest endpoint (e.g. `http://host/v1/records`).
    Http(String),
    /// Keep lines in memory; read back with [`TelemetryClient::drain_memory_sink`].
    Memory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub sampler: SamplerConfig,
    pub sink: SinkConfig,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            sampler: SamplerConfig::default(),
            sink: SinkConfig::Memory,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    BadProbability(#[from] BadProbability),
    #[error("switch target {0} is already focused")]
    AlreadyFocused(ModuleId),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("sink error: {0}")]
    Sink(String),
}

enum Sink {
    File(File),
    Http {
        url: String,
        agent: reqwest::blocking::Client,
    },
    Memory(Vec<String>),
}

impl Sink {
    fn open(cfg: &SinkConfig) -> Result<Sink, ClientError> {
        match cfg {
            SinkConfig::File(path) => {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| ClientError::Sink(e.to_string()))?;
                Ok(Sink::File(file))
            }
            SinkConfig::Http(url) => Ok(Sink::Http {
                url: url.clone(),
                agent: reqwest::blocking::Client::new(),
            }),
            SinkConfig::Memory => Ok(Sink::Memory(Vec::new())),
        }
    }

    fn deliver(&mut self, line: &str) -> Result<(), ClientError> {
        match self {
            Sink::File(file) => writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|e| ClientError::Sink(e.to_string())),
            Sink::Http { url, agent } => agent
                .post(url.as_str())
                .body(format!("{line}\n"))
                .send()
                .map_err(|e| ClientError::Sink(e.to_string()))
                .and_then(|resp| {
                    if resp.status().is_success() {
                        Ok(())
                    } else {
                        Err(ClientError::Sink(format!(
                            "ingest endpoint returned {}",
                            resp.status()
                        )))
                    }
                }),
            Sink::Memory(lines) => {
                lines.push(line.to_string());
                Ok(())
            }
        }
    }
}

/// Full-project error lists from one analyzer invocation pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisSnapshot {
    pub visible: BTreeMap<ModuleId, Vec<AnalysisError>>,
    pub background: BTreeMap<ModuleId, Vec<AnalysisError>>,
}

/// An edit to apply to the focused module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientEdit {
    pub module: ModuleId,
    pub change: SourceEdit,
}

pub struct TelemetryClient {
    session_id: SessionId,
    enrolled: bool,
    sampler: Sampler,
    state: ProjectState,
    current_module: ModuleId,
    prev: AnalysisSnapshot,
    curr: AnalysisSnapshot,
    tracker: EditRange,
    too_complex_running: u64,
    last_emit_range: Option<(u32, u32)>,
    sink: Sink,
}

impl TelemetryClient {
    /// Build a client, decide enrollment, and run the initial analysis;
    /// both snapshots start as that analysis.
    pub fn new(
        project: Project,
        initial_module: &ModuleId,
        config: &ClientConfig,
        budget: AnalysisBudget,
    ) -> Result<TelemetryClient, ClientError> {
        if !project.modules.contains_key(initial_module) {
            return Err(AnalyzerError::UnknownModule(initial_module.clone()).into());
        }
        let mut sampler = Sampler::new(config.sampler)?;
        let (enrolled, session_id) = sampler.enroll_session();
        let state = ProjectState::new(project, budget);
        let snapshot = AnalysisSnapshot {
            visible: state.visible_error_map(),
            background: state.background_error_map(),
        };
        let too_complex_running = count_too_complex(&snapshot, None);
        Ok(TelemetryClient {
            session_id,
            enrolled,
            sampler,
            state,
            current_module: initial_module.clone(),
            prev: snapshot.clone(),
            curr: snapshot,
            tracker: EditRange::empty(),
            too_complex_running,
            last_emit_range: None,
            sink: Sink::open(&config.sink)?,
        })
    }

    pub fn session_id(&self) -> SessionId {
        self.session_id
    }

    pub fn enrolled(&self) -> bool {
        self.enrolled
    }

    pub fn current_module(&self) -> &ModuleId {
        &self.current_module
    }

    pub fn current_mode(&self) -> Mode {
        self.state
            .mode_of(&self.current_module)
            .expect("focused module exists")
    }

    pub fn project(&self) -> &Project {
        self.state.project()
    }

    pub fn tracker(&self) -> EditRange {
        self.tracker
    }

    pub fn snapshots(&self) -> (&AnalysisSnapshot, &AnalysisSnapshot) {
        (&self.prev, &self.curr)
    }

    pub fn too_complex_running(&self) -> u64 {
        self.too_complex_running
    }

    /// Edit range that fed the most recently built record.
    pub fn last_emit_range(&self) -> Option<(u32, u32)> {
        self.last_emit_range
    }

    pub fn drain_memory_sink(&mut self) -> Vec<String> {
        match &mut self.sink {
            Sink::Memory(lines) => std::mem::take(lines),
            _ => Vec::new(),
        }
    }

    /// Apply one edit to the focused module: update the tracker, re-analyze
    /// the dirty set, rotate snapshots, then flip the event coin. Sampled
    /// edits emit a keystroke record and reset the tracker.
    pub fn on_edit(
        &mut self,
        edit: &ClientEdit,
        now_ms: u64,
    ) -> Result<Option<TelemetryRecord>, ClientError> {
        if edit.module != self.current_module {
            return Err(AnalyzerError::InvalidEdit {
                module: edit.module.clone(),
                message: format!("edit targets unfocused module (focus is {})", self.current_module),
            }
            .into());
        }
        let ops = self.state.apply_edit(&edit.module, &edit.change)?;
        for op in ops {
            self.tracker = self.tracker.apply_edit(op);
        }
        let fresh = self.state.refresh();
        let snapshot = AnalysisSnapshot {
            visible: self.state.visible_error_map(),
            background: self.state.background_error_map(),
        };
        self.too_complex_running += count_too_complex(&snapshot, Some(&fresh));
        self.prev = std::mem::replace(&mut self.curr, snapshot);

        if !self.enrolled || !self.sampler.sample_event() {
            return Ok(None);
        }
        let record = self.build_record(Reason::Keystroke, now_ms);
        self.tracker = self.tracker.reset();
        self.deliver(&record)?;
        Ok(Some(record))
    }

    /// Change focus. A record for the outgoing module is always emitted
    /// (never sampled); the tracker resets for the new module.
    pub fn on_module_switch(
        &mut self,
        target: &ModuleId,
        now_ms: u64,
    ) -> Result<Option<TelemetryRecord>, ClientError> {
        if !self.state.project().modules.contains_key(target) {
            return Err(AnalyzerError::UnknownModule(target.clone()).into());
        }
        if *target == self.current_module {
            return Err(ClientError::AlreadyFocused(target.clone()));
        }
        let record = if self.enrolled {
            let record = self.build_record(Reason::ModuleSwitch, now_ms);
            self.deliver(&record)?;
            Some(record)
        } else {
            None
        };
        self.current_module = target.clone();
        self.tracker = self.tracker.reset();
        Ok(record)
    }

    /// Assemble a record from the current snapshots and tracker.
    pub fn build_record(&mut self, reason: Reason, now_ms: u64) -> TelemetryRecord {
        self.last_emit_range = self.tracker.as_interval();
        let module = &self.current_module;
        let overall = OverallCounts {
            type_curr: loc_counts(&self.curr.visible, module, self.tracker),
            type_prev: loc_counts(&self.prev.visible, module, self.tracker),
            bg_curr: loc_counts(&self.curr.background, module, self.tracker),
            bg_prev: loc_counts(&self.prev.background, module, self.tracker),
            too_complex_total: self.too_complex_running,
        };
        let mut edit_kinds = EditKindCounts::new();
        let curr_overlaps = overlapping_kinds(&self.curr.visible, module, self.tracker);
        let prev_overlaps = overlapping_kinds(&self.prev.visible, module, self.tracker);
        for kind in crate::kind::ErrorKind::ALL {
            let curr = curr_overlaps.get(&kind).copied().unwrap_or(0);
            let prev = prev_overlaps.get(&kind).copied().unwrap_or(0);
            edit_kinds.set(kind, curr, prev);
        }
        TelemetryRecord {
            session_id: self.session_id,
            client_ts_ms: now_ms,
            server_ts_ms: None,
            mode: self.current_mode(),
            reason,
            lines_total: self.state.total_lines(),
            lines_edit: EditLines::Lines(self.tracker.width() as i64),
            overall,
            edit_kinds,
        }
    }

    fn deliver(&mut self, record: &TelemetryRecord) -> Result<(), ClientError> {
        let line = serialize_record(record)?;
        self.sink.deliver(&line)
    }
}

fn loc_counts(
    errors: &BTreeMap<ModuleId, Vec<AnalysisError>>,
    module: &ModuleId,
    tracker: EditRange,
) -> LocCounts {
    let total = errors.values().map(|v| v.len() as u64).sum();
    let local = errors.get(module).map(Vec::as_slice).unwrap_or(&[]);
    let in_module = local.len() as u64;
    let in_edit_range = local.iter().filter(|e| tracker.overlaps(e)).count() as u64;
    LocCounts {
        total,
        in_module,
        in_edit_range,
    }
}

fn overlapping_kinds(
    errors: &BTreeMap<ModuleId, Vec<AnalysisError>>,
    module: &ModuleId,
    tracker: EditRange,
) -> BTreeMap<crate::kind::ErrorKind, u64> {
    let mut out = BTreeMap::new();
    for err in errors.get(module).map(Vec::as_slice).unwrap_or(&[]) {
        if tracker.overlaps(err) {
            *out.entry(err.kind).or_default() += 1;
        }
    }
    out
}

/// Count too-complex occurrences among freshly analyzed modules (both
/// analyses); `None` counts every module (initial analysis).
fn count_too_complex(
    snapshot: &AnalysisSnapshot,
    fresh: Option<&std::collections::BTreeSet<ModuleId>>,
) -> u64 {
    let mut count = 0;
    for map in [&snapshot.visible, &snapshot.background] {
        for (module, errors) in map {
            if fresh.is_none_or(|set| set.contains(module)) {
                count += errors.iter().filter(|e| e.kind.is_too_complex()).count() as u64;
            }
        }
    }
    count
}
