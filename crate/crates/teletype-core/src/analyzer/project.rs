//! Project sources: modules with mode pragmas plus the data-model asset set.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyzer::ast::collect_requires;
use crate::analyzer::parser::parse_module;
use crate::kind::ModuleId;
use crate::record::Mode;

/// One module's source text. The analysis mode comes from a `--!<mode>`
/// pragma on the first line; without one the module is nocheck.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleSource {
    pub id: ModuleId,
    pub lines: Vec<String>,
}

impl ModuleSource {
    pub fn from_text(id: impl Into<ModuleId>, text: &str) -> ModuleSource {
        ModuleSource {
            id: id.into(),
            lines: text.lines().map(str::to_string).collect(),
        }
    }

    pub fn text(&self) -> String {
        self.lines.join("\n")
    }

    pub fn line_count(&self) -> u64 {
        self.lines.len() as u64
    }

    pub fn has_pragma_line(&self) -> bool {
        self.lines
            .first()
            .map(|l| parse_pragma(l).is_some())
            .unwrap_or(false)
    }

    pub fn pragma_mode(&self) -> Mode {
        self.lines
            .first()
            .and_then(|l| parse_pragma(l))
            .unwrap_or(Mode::Nocheck)
    }

    /// Statically-resolvable import targets, in source order, deduplicated.
    pub fn imports(&self) -> Vec<ModuleId> {
        let (chunk, _) = parse_module(&self.id, &self.lines);
        let mut seen = BTreeSet::new();
        collect_requires(&chunk)
            .into_iter()
            .filter(|m| seen.insert(m.clone()))
            .collect()
    }
}

pub fn parse_pragma(line: &str) -> Option<Mode> {
    let trimmed = line.trim();
    let tag = trimmed.strip_prefix("--!")?;
    Mode::from_tag(tag.trim())
}

pub fn pragma_line(mode: Mode) -> String {
    format!("--!{}", mode.tag())
}

/// A set of modules plus the asset names reachable from the data-model
/// root. The asset list is carried for simulation and privacy auditing; the
/// checker types the root wholesale and never inspects individual assets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub modules: BTreeMap<ModuleId, ModuleSource>,
    pub data_model: BTreeSet<String>,
}

impl Project {
    pub fn new() -> Project {
        Project::default()
    }

    pub fn insert_module(&mut self, module: ModuleSource) {
        self.modules.insert(module.id.clone(), module);
    }

    pub fn module(&self, id: &ModuleId) -> Option<&ModuleSource> {
        self.modules.get(id)
    }

    pub fn total_lines(&self) -> u64 {
        self.modules.values().map(|m| m.line_count()).sum()
    }

    /// Load `<id>.luau` module files and an optional `data_model.txt`
    /// (one asset name per line) from a directory.
    pub fn load_dir(dir: &Path) -> io::Result<Project> {
        let mut project = Project::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?
            .collect::<io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some(stem) = name.strip_suffix(".luau") {
                let text = std::fs::read_to_string(&path)?;
                project.insert_module(ModuleSource::from_text(stem, &text));
            } else if name == "data_model.txt" {
                let text = std::fs::read_to_string(&path)?;
                project.data_model = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect();
            }
        }
        Ok(project)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pragma_parsing_defaults_to_nocheck() {
        let m = ModuleSource::from_text("a", "--!strict\nlocal x = 1");
        assert_eq!(m.pragma_mode(), Mode::Strict);
        let m = ModuleSource::from_text("b", "local x = 1");
        assert_eq!(m.pragma_mode(), Mode::Nocheck);
        assert!(!m.has_pragma_line());
        let m = ModuleSource::from_text("c", "--!loose\nlocal x = 1");
        assert_eq!(m.pragma_mode(), Mode::Nocheck);
    }

    #[test]
    fn imports_are_collected_in_order() {
        let m = ModuleSource::from_text(
            "root",
            "local a = require(\"alpha\")\nlocal b = require(\"beta\")\nlocal c = require(\"alpha\")",
        );
        let imports = m.imports();
        let ids: Vec<&str> = imports.iter().map(|m| m.as_str()).collect();
        assert_eq!(ids, vec!["alpha", "beta"]);
    }

    #[test]
    fn load_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("main.luau"), "--!strict\nlocal x = 1\n").unwrap();
        std::fs::write(dir.path().join("util.luau"), "return { helper = 1 }\n").unwrap();
        std::fs::write(dir.path().join("data_model.txt"), "Workspace\nLighting\n").unwrap();
        let project = Project::load_dir(dir.path()).unwrap();
        assert_eq!(project.modules.len(), 2);
        assert_eq!(project.total_lines(), 3);
        assert!(project.data_model.contains("Workspace"));
    }
}
