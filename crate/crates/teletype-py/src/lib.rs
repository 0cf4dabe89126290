//! Python bindings for the telemetry pipeline: analyze source text, parse
//! and clean wire records, audit privacy, and drive the simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use teletype_core::analyzer::{check_module, AnalysisBudget, ModuleSource, Project};
use teletype_core::kind::ModuleId;
use teletype_core::privacy;
use teletype_core::record::{clean, parse_record, serialize_record, Mode};
use teletype_core::sim::generate::{gen_random_scenario, GenParams};
use teletype_core::sim::{parse_script, run_scenario, to_script, SimConfig};

fn value_err(message: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(message.to_string())
}

/// Check one module's source under a mode ("nocheck", "nonstrict",
/// "strict", or "background"). Returns (kind, start_line, end_line) tuples.
#[pyfunction]
#[pyo3(signature = (text, mode, max_steps=None))]
fn check_source(
    text: &str,
    mode: &str,
    max_steps: Option<u64>,
) -> PyResult<Vec<(String, u32, u32)>> {
    let mut project = Project::new();
    let id = ModuleId::new("source");
    project.insert_module(ModuleSource::from_text("source", text));
    let budget = max_steps.map(AnalysisBudget::new).unwrap_or_default();
    let errors = if mode == "background" {
        teletype_core::analyzer::background_check(&project, budget)
            .remove(&id)
            .unwrap_or_default()
    } else {
        let mode = Mode::from_tag(mode)
            .ok_or_else(|| value_err(format!("unknown mode {mode:?}")))?;
        check_module(&project, &id, mode, budget).map_err(value_err)?
    };
    Ok(errors
        .into_iter()
        .map(|e| (e.kind.tag().to_string(), e.start_line, e.end_line))
        .collect())
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// Parse one wire line into a flat dict of its fields. Rejects anything
/// outside the record schema.
#[pyfunction]
fn parse_record_line<'py>(py: Python<'py>, line: &str) -> PyResult<Bound<'py, PyAny>> {
    let record = parse_record(line).map_err(value_err)?;
    let canonical = serialize_record(&record).map_err(value_err)?;
    let value: serde_json::Value = serde_json::from_str(&canonical).expect("canonical line");
    json_to_py(py, &value)
}

/// Apply the cleaning rules (duplicate drop, corrupt-edit voiding) to wire
/// lines, returning cleaned wire lines.
#[pyfunction]
fn clean_lines(lines: Vec<String>) -> PyResult<Vec<String>> {
    let records = lines
        .iter()
        .enumerate()
        .map(|(i, line)| parse_record(line).map_err(|e| value_err(format!("line {}: {e}", i + 1))))
        .collect::<PyResult<Vec<_>>>()?;
    clean(records)
        .iter()
        .map(|r| serialize_record(r).map_err(value_err))
        .collect()
}

/// Scan record bytes for forbidden strings (length >= 4). Returns the
/// offending string, or None when the record is clean.
#[pyfunction]
fn audit_privacy(record: &str, forbidden: Vec<String>) -> Option<String> {
    let set = forbidden.into_iter().collect();
    privacy::audit_privacy(record.as_bytes(), &set)
        .err()
        .map(|leak| leak.offender)
}

/// Replay a scenario script. Returns (wire lines, ledger JSON).
#[pyfunction]
#[pyo3(signature = (script, seed=0, p_event=1.0, p_session=1.0, per_char=false))]
fn run_scenario_script(
    script: &str,
    seed: u64,
    p_event: f64,
    p_session: f64,
    per_char: bool,
) -> PyResult<(Vec<String>, String)> {
    let scenario = parse_script(script, None).map_err(value_err)?;
    let cfg = SimConfig {
        p_session,
        p_event,
        seed,
        per_char,
        ..SimConfig::default()
    };
    let out = run_scenario(&scenario, &cfg).map_err(value_err)?;
    let ledger = serde_json::to_string(&out.ledger).map_err(value_err)?;
    Ok((out.lines, ledger))
}

/// Generate a deterministic random scenario script.
#[pyfunction]
#[pyo3(signature = (seed=0, modules=6, actions=200, typo_rate=0.15))]
fn gen_scenario(seed: u64, modules: usize, actions: usize, typo_rate: f64) -> String {
    let scenario = gen_random_scenario(
        seed,
        &GenParams {
            n_modules: modules,
            n_actions: actions,
            typo_rate,
            ..GenParams::default()
        },
    );
    to_script(&scenario)
}

#[pymodule]
fn teletype_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check_source, m)?)?;
    m.add_function(wrap_pyfunction!(parse_record_line, m)?)?;
    m.add_function(wrap_pyfunction!(clean_lines, m)?)?;
    m.add_function(wrap_pyfunction!(audit_privacy, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_script, m)?)?;
    m.add_function(wrap_pyfunction!(gen_scenario, m)?)?;
    Ok(())
}
