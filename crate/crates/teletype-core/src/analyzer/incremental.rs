//! Incremental project analysis with dirty-module tracking.
//!
//! Edits mark their module dirty; the dirty closure (the module plus all
//! transitive importers) is re-analyzed on the next refresh, everything else
//! is served from cache. Caching is transparent: results are identical to a
//! fresh full analysis of the same sources.

use std::collections::{BTreeMap, BTreeSet};

use crate::analyzer::ast::Chunk;
use crate::analyzer::checker::{check_chunk, CheckInput, CheckOutcome};
use crate::analyzer::graph::ImportGraph;
use crate::analyzer::parser::parse_module;
use crate::analyzer::project::{Project, ModuleSource};
use crate::analyzer::types::SimpleType;
use crate::analyzer::{filter_for_mode, AnalysisBudget};
use crate::edit_range::EditOp;
use crate::kind::{AnalysisError, ModuleId};
use crate::record::Mode;

/// A change to module source text, in whole lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceEdit {
    /// Insert lines so the first occupies `at_line` (1..=len+1).
    Insert { at_line: u32, lines: Vec<String> },
    /// Remove up to `n_lines` lines starting at `from_line`; clamped at the
    /// end of the document.
    Delete { from_line: u32, n_lines: u32 },
    /// Overwrite lines starting at `from_line`, extending the document when
    /// the replacement runs past the end.
    Replace { from_line: u32, lines: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzerError {
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
    #[error("invalid edit on {module}: {message}")]
    InvalidEdit { module: ModuleId, message: String },
}

#[derive(Debug, Clone)]
struct ParsedModule {
    chunk: Chunk,
    syntax: Vec<AnalysisError>,
    raw_imports: Vec<ModuleId>,
    line_count: u32,
}

#[derive(Debug, Clone)]
struct FlavorResult {
    export: SimpleType,
    errors: Vec<AnalysisError>,
}

/// Analyzed project with per-module caches for the visible and background
/// analyses.
#[derive(Debug, Clone)]
pub struct ProjectState {
    project: Project,
    budget: AnalysisBudget,
    parsed: BTreeMap<ModuleId, ParsedModule>,
    graph: ImportGraph,
    visible: BTreeMap<ModuleId, FlavorResult>,
    background: BTreeMap<ModuleId, FlavorResult>,
    dirty: BTreeSet<ModuleId>,
}

impl ProjectState {
    pub fn new(project: Project, budget: AnalysisBudget) -> ProjectState {
        let dirty: BTreeSet<ModuleId> = project.modules.keys().cloned().collect();
        let mut state = ProjectState {
            project,
            budget,
            parsed: BTreeMap::new(),
            graph: ImportGraph::default(),
            visible: BTreeMap::new(),
            background: BTreeMap::new(),
            dirty,
        };
        state.refresh();
        state
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn budget(&self) -> AnalysisBudget {
        self.budget
    }

    pub fn total_lines(&self) -> u64 {
        self.project.total_lines()
    }

    pub fn mode_of(&self, module: &ModuleId) -> Result<Mode, AnalyzerError> {
        self.project
            .module(module)
            .map(|m| m.pragma_mode())
            .ok_or_else(|| AnalyzerError::UnknownModule(module.clone()))
    }

    /// The module plus everything that transitively imports it. Also queues
    /// those modules for re-analysis on the next refresh.
    pub fn mark_dirty(&mut self, module: &ModuleId) -> Result<BTreeSet<ModuleId>, AnalyzerError> {
        if !self.project.modules.contains_key(module) {
            return Err(AnalyzerError::UnknownModule(module.clone()));
        }
        let closure = self.graph.dirty_closure(module);
        self.dirty.extend(closure.iter().cloned());
        Ok(closure)
    }

    /// Apply a source edit and return the tracker-level edit operations it
    /// corresponds to (one, or two when a replace extends the document).
    pub fn apply_edit(
        &mut self,
        module: &ModuleId,
        edit: &SourceEdit,
    ) -> Result<Vec<EditOp>, AnalyzerError> {
        let source = self
            .project
            .modules
            .get_mut(module)
            .ok_or_else(|| AnalyzerError::UnknownModule(module.clone()))?;
        let ops = apply_source_edit(source, edit).map_err(|message| AnalyzerError::InvalidEdit {
            module: module.clone(),
            message,
        })?;
        self.mark_dirty(module)?;
        Ok(ops)
    }

    /// Re-parse and re-check every dirty module. Returns the set that was
    /// freshly analyzed.
    pub fn refresh(&mut self) -> BTreeSet<ModuleId> {
        if self.dirty.is_empty() {
            return BTreeSet::new();
        }
        let work: BTreeSet<ModuleId> = std::mem::take(&mut self.dirty);
        for id in &work {
            let source = &self.project.modules[id];
            let (chunk, syntax) = parse_module(id, &source.lines);
            let raw_imports = crate::analyzer::ast::collect_requires(&chunk);
            self.parsed.insert(
                id.clone(),
                ParsedModule {
                    chunk,
                    syntax,
                    raw_imports,
                    line_count: source.lines.len() as u32,
                },
            );
        }
        let module_ids: BTreeSet<ModuleId> = self.project.modules.keys().cloned().collect();
        let raw: BTreeMap<ModuleId, Vec<ModuleId>> = self
            .parsed
            .iter()
            .map(|(id, p)| (id.clone(), p.raw_imports.clone()))
            .collect();
        self.graph = ImportGraph::build(&module_ids, &raw);

        for id in self.graph.topo_order() {
            if !work.contains(&id) {
                continue;
            }
            let parsed = &self.parsed[&id];
            // Visible analysis: data-model root is opaque, imports of
            // nocheck modules are not analyzed (typed dynamic).
            let vis_exports: BTreeMap<ModuleId, SimpleType> = self
                .graph
                .kept_deps(&id)
                .map(|dep| {
                    let ty = if self.project.modules[dep].pragma_mode() == Mode::Nocheck {
                        SimpleType::Dynamic
                    } else {
                        self.visible[dep].export.clone()
                    };
                    (dep.clone(), ty)
                })
                .collect();
            let vis = check_chunk(CheckInput {
                module: &id,
                chunk: &parsed.chunk,
                line_count: parsed.line_count,
                game_type: SimpleType::Top,
                known_modules: &module_ids,
                removed_edges: self.graph.removed_edges(),
                dep_exports: &vis_exports,
                budget: self.budget,
            });
            self.visible.insert(id.clone(), store(vis));

            // Background analysis: forced strict with a dynamic data-model
            // root; every import is analyzed regardless of its mode.
            let bg_exports: BTreeMap<ModuleId, SimpleType> = self
                .graph
                .kept_deps(&id)
                .map(|dep| (dep.clone(), self.background[dep].export.clone()))
                .collect();
            let bg = check_chunk(CheckInput {
                module: &id,
                chunk: &parsed.chunk,
                line_count: parsed.line_count,
                game_type: SimpleType::Dynamic,
                known_modules: &module_ids,
                removed_edges: self.graph.removed_edges(),
                dep_exports: &bg_exports,
                budget: self.budget,
            });
            self.background.insert(id.clone(), store(bg));
        }
        work
    }

    /// Errors a creator sees for one module under an explicit mode.
    pub fn errors_for_mode(&self, module: &ModuleId, mode: Mode) -> Vec<AnalysisError> {
        let parsed = &self.parsed[module];
        let mut errors = parsed.syntax.clone();
        if mode != Mode::Nocheck {
            errors.extend(filter_for_mode(mode, &self.visible[module].errors));
        }
        errors
    }

    /// Visible errors per module, each under its own pragma mode.
    pub fn visible_error_map(&self) -> BTreeMap<ModuleId, Vec<AnalysisError>> {
        self.project
            .modules
            .iter()
            .map(|(id, source)| (id.clone(), self.errors_for_mode(id, source.pragma_mode())))
            .collect()
    }

    /// Background (forced strict) errors per module.
    pub fn background_error_map(&self) -> BTreeMap<ModuleId, Vec<AnalysisError>> {
        self.project
            .modules
            .keys()
            .map(|id| {
                let mut errors = self.parsed[id].syntax.clone();
                errors.extend(self.background[id].errors.iter().cloned());
                (id.clone(), errors)
            })
            .collect()
    }
}

fn store(outcome: CheckOutcome) -> FlavorResult {
    FlavorResult {
        export: outcome.export,
        errors: outcome.errors,
    }
}

fn apply_source_edit(source: &mut ModuleSource, edit: &SourceEdit) -> Result<Vec<EditOp>, String> {
    let len = source.lines.len() as u32;
    match edit {
        SourceEdit::Insert { at_line, lines } => {
            if lines.is_empty() {
                return Err("insert of zero lines".into());
            }
            if *at_line < 1 || *at_line > len + 1 {
                return Err(format!("insert at line {at_line} outside 1..={}", len + 1));
            }
            let at = (*at_line - 1) as usize;
            for (offset, line) in lines.iter().enumerate() {
                source.lines.insert(at + offset, line.clone());
            }
            Ok(vec![EditOp::Insert {
                at_line: *at_line,
                n_lines: lines.len() as u32,
            }])
        }
        SourceEdit::Delete { from_line, n_lines } => {
            if *from_line < 1 || *from_line > len {
                return Err(format!("delete from line {from_line} outside 1..={len}"));
            }
            if *n_lines == 0 {
                return Err("delete of zero lines".into());
            }
            let n = (*n_lines).min(len - *from_line + 1);
            let from = (*from_line - 1) as usize;
            source.lines.drain(from..from + n as usize);
            Ok(vec![EditOp::Delete {
                from_line: *from_line,
                n_lines: n,
            }])
        }
        SourceEdit::Replace { from_line, lines } => {
            if lines.is_empty() {
                return Err("replace with zero lines".into());
            }
            if *from_line < 1 || *from_line > len + 1 {
                return Err(format!("replace at line {from_line} outside 1..={}", len + 1));
            }
            let overlap = if *from_line <= len {
                (lines.len() as u32).min(len - *from_line + 1)
            } else {
                0
            };
            let from = (*from_line - 1) as usize;
            for (offset, line) in lines.iter().take(overlap as usize).enumerate() {
                source.lines[from + offset] = line.clone();
            }
            let mut ops = Vec::new();
            if overlap > 0 {
                ops.push(EditOp::Modify {
                    from_line: *from_line,
                    to_line: *from_line + overlap - 1,
                });
            }
            let extra = lines.len() as u32 - overlap;
            if extra > 0 {
                let at = *from_line + overlap;
                for (offset, line) in lines.iter().skip(overlap as usize).enumerate() {
                    source
                        .lines
                        .insert((at - 1) as usize + offset, line.clone());
                }
                ops.push(EditOp::Insert {
                    at_line: at,
                    n_lines: extra,
                });
            }
            Ok(ops)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module(id: &str, text: &str) -> ModuleSource {
        ModuleSource::from_text(id, text)
    }

    #[test]
    fn replace_past_end_extends_and_reports_both_ops() {
        let mut m = module("m", "a\nb");
        let ops = apply_source_edit(
            &mut m,
            &SourceEdit::Replace {
                from_line: 2,
                lines: vec!["B".into(), "C".into(), "D".into()],
            },
        )
        .unwrap();
        assert_eq!(m.lines, vec!["a", "B", "C", "D"]);
        assert_eq!(
            ops,
            vec![
                EditOp::Modify {
                    from_line: 2,
                    to_line: 2
                },
                EditOp::Insert {
                    at_line: 3,
                    n_lines: 2
                }
            ]
        );
    }

    #[test]
    fn delete_is_clamped_to_document_end() {
        let mut m = module("m", "a\nb\nc");
        let ops = apply_source_edit(
            &mut m,
            &SourceEdit::Delete {
                from_line: 2,
                n_lines: 10,
            },
        )
        .unwrap();
        assert_eq!(m.lines, vec!["a"]);
        assert_eq!(
            ops,
            vec![EditOp::Delete {
                from_line: 2,
                n_lines: 2
            }]
        );
    }

    #[test]
    fn edits_to_unknown_modules_are_rejected() {
        let mut project = Project::new();
        project.insert_module(module("a", "--!strict\nlocal x = 1"));
        let mut state = ProjectState::new(project, AnalysisBudget::default());
        let err = state
            .apply_edit(
                &ModuleId::new("ghost"),
                &SourceEdit::Delete {
                    from_line: 1,
                    n_lines: 1,
                },
            )
            .unwrap_err();
        assert!(matches!(err, AnalyzerError::UnknownModule(_)));
    }
}
