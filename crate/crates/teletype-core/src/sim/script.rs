//! Line-oriented scenario files.
//!
//! One directive per line; `#` starts a comment. Seed directives build the
//! project, action directives drive the session:
//!
//! ```text
//! module <id> <mode>          # declare a module seeded with its pragma line
//! line <id> <text...>         # append a seed line to a declared module
//! asset <name>                # add a data-model asset name
//! project <dir>               # load modules + data_model.txt from a directory
//! open <id>                   # focus the first module (no record)
//! type <id> <line> <text...>  # edit: text may contain \n escapes (block edit)
//! delete <id> <from> <n>
//! mode <id> <nocheck|nonstrict|strict>
//! switch <id>
//! wait <ms>
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyzer::project::{pragma_line, ModuleSource, Project};
use crate::kind::ModuleId;
use crate::record::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Open(ModuleId),
    /// Type a block of text starting at `line`: overwrites existing lines
    /// and extends the module when the block runs past the end. One action
    /// is one analysis (and one sampling coin).
    TypeText {
        module: ModuleId,
        line: u32,
        text: String,
    },
    Delete {
        module: ModuleId,
        from_line: u32,
        n_lines: u32,
    },
    SetMode {
        module: ModuleId,
        mode: Mode,
    },
    Switch(ModuleId),
    Wait(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub project: Project,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scenario line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError {
        line,
        message: message.into(),
    }
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('\n', "\\n")
}

/// Parse a scenario file. `base_dir` resolves relative `project` directives.
pub fn parse_script(text: &str, base_dir: Option<&Path>) -> Result<Scenario, ScriptError> {
    let mut scenario = Scenario::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match word {
            "module" => {
                let mut parts = rest.split_whitespace();
                let id = parts
                    .next()
                    .ok_or_else(|| err(lineno, "module needs an id"))?;
                let mode = parts
                    .next()
                    .and_then(Mode::from_tag)
                    .ok_or_else(|| err(lineno, "module needs a mode tag"))?;
                scenario.project.insert_module(ModuleSource {
                    id: ModuleId::new(id),
                    lines: vec![pragma_line(mode)],
                });
            }
            "line" => {
                let (id, text) = rest
                    .split_once(char::is_whitespace)
                    .map(|(a, b)| (a, b.trim_start()))
                    .unwrap_or((rest, ""));
                let module = scenario
                    .project
                    .modules
                    .get_mut(&ModuleId::new(id))
                    .ok_or_else(|| err(lineno, format!("line for undeclared module {id:?}")))?;
                module.lines.push(unescape(text));
            }
            "asset" => {
                if rest.is_empty() {
                    return Err(err(lineno, "asset needs a name"));
                }
                scenario.project.data_model.insert(rest.to_string());
            }
            "project" => {
                let dir = match base_dir {
                    Some(base) => base.join(rest),
                    None => Path::new(rest).to_path_buf(),
                };
                let loaded = Project::load_dir(&dir)
                    .map_err(|e| err(lineno, format!("cannot load project dir: {e}")))?;
                for module in loaded.modules.into_values() {
                    scenario.project.insert_module(module);
                }
                scenario.project.data_model.extend(loaded.data_model);
            }
            "open" | "switch" => {
                let id = ModuleId::new(rest);
                require_module(&scenario, &id, lineno)?;
                scenario.actions.push(if word == "open" {
                    Action::Open(id)
                } else {
                    Action::Switch(id)
                });
            }
            "type" => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let id = parts.next().filter(|s| !s.is_empty());
                let line_no = id.and_then(|_| parts.next()).and_then(|n| n.parse().ok());
                let (Some(id), Some(line_no)) = (id, line_no) else {
                    return Err(err(lineno, "type needs: <module> <line> <text>"));
                };
                if line_no == 0 {
                    return Err(err(lineno, "line numbers are 1-based"));
                }
                let id = ModuleId::new(id);
                require_module(&scenario, &id, lineno)?;
                scenario.actions.push(Action::TypeText {
                    module: id,
                    line: line_no,
                    text: unescape(parts.next().unwrap_or("")),
                });
            }
            "delete" => {
                let mut parts = rest.split_whitespace();
                let id = parts.next();
                let from = parts.next().and_then(|n| n.parse::<u32>().ok());
                let n = parts.next().and_then(|n| n.parse::<u32>().ok());
                let (Some(id), Some(from), Some(n)) = (id, from, n) else {
                    return Err(err(lineno, "delete needs: <module> <from> <n>"));
                };
                if from == 0 || n == 0 {
                    return Err(err(lineno, "delete arguments must be >= 1"));
                }
                let id = ModuleId::new(id);
                require_module(&scenario, &id, lineno)?;
                scenario.actions.push(Action::Delete {
                    module: id,
                    from_line: from,
                    n_lines: n,
                });
            }
            "mode" => {
                let mut parts = rest.split_whitespace();
                let id = parts.next();
                let mode = parts.next().and_then(Mode::from_tag);
                let (Some(id), Some(mode)) = (id, mode) else {
                    return Err(err(lineno, "mode needs: <module> <nocheck|nonstrict|strict>"));
                };
                let id = ModuleId::new(id);
                require_module(&scenario, &id, lineno)?;
                scenario.actions.push(Action::SetMode { module: id, mode });
            }
            "wait" => {
                let ms = rest
                    .parse()
                    .map_err(|_| err(lineno, "wait needs milliseconds"))?;
                scenario.actions.push(Action::Wait(ms));
            }
            other => return Err(err(lineno, format!("unknown directive {other:?}"))),
        }
    }
    Ok(scenario)
}

fn require_module(scenario: &Scenario, id: &ModuleId, lineno: usize) -> Result<(), ScriptError> {
    if scenario.project.modules.contains_key(id) {
        Ok(())
    } else {
        Err(err(lineno, format!("unknown module {id}")))
    }
}

/// Render a scenario back to script text (inline seeds only).
pub fn to_script(scenario: &Scenario) -> String {
    let mut out = String::new();
    for (id, module) in &scenario.project.modules {
        let mode = module.pragma_mode();
        out.push_str(&format!("module {id} {}\n", mode.tag()));
        let body = if module.has_pragma_line() {
            &module.lines[1..]
        } else {
            &module.lines[..]
        };
        for line in body {
            out.push_str(&format!("line {id} {}\n", escape(line)));
        }
    }
    for asset in &scenario.project.data_model {
        out.push_str(&format!("asset {asset}\n"));
    }
    for action in &scenario.actions {
        match action {
            Action::Open(id) => out.push_str(&format!("open {id}\n")),
            Action::Switch(id) => out.push_str(&format!("switch {id}\n")),
            Action::TypeText { module, line, text } => {
                out.push_str(&format!("type {module} {line} {}\n", escape(text)))
            }
            Action::Delete {
                module,
                from_line,
                n_lines,
            } => out.push_str(&format!("delete {module} {from_line} {n_lines}\n")),
            Action::SetMode { module, mode } => {
                out.push_str(&format!("mode {module} {}\n", mode.tag()))
            }
            Action::Wait(ms) => out.push_str(&format!("wait {ms}\n")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let text = "# demo\n\
            module main nonstrict\n\
            line main local x = 1\n\
            asset Workspace\n\
            open main\n\
            type main 3 local y = 2\\nlocal z = 3\n\
            wait 250\n\
            mode main strict\n\
            delete main 2 1\n";
        let scenario = parse_script(text, None).unwrap();
        assert_eq!(scenario.actions.len(), 5);
        let rendered = to_script(&scenario);
        let reparsed = parse_script(&rendered, None).unwrap();
        assert_eq!(scenario, reparsed);
    }

    #[test]
    fn actions_must_reference_declared_modules() {
        let e = parse_script("open ghost\n", None).unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_script("module m strict\ntype other 1 x\n", None).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn newline_escapes_round_trip() {
        assert_eq!(unescape("a\\nb\\\\c"), "a\nb\\c");
        assert_eq!(escape("a\nb\\c"), "a\\nb\\\\c");
    }

    #[test]
    fn project_directive_loads_modules_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("main.luau"), "--!strict\nlocal x = 1\n").unwrap();
        std::fs::write(dir.path().join("data_model.txt"), "KelpGarden\n").unwrap();
        let scenario = parse_script("project .\nopen main\n", Some(dir.path())).unwrap();
        assert!(scenario
            .project
            .modules
            .contains_key(&ModuleId::new("main")));
        assert!(scenario.project.data_model.contains("KelpGarden"));
    }
}
