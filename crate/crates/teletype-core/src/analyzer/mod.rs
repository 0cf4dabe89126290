//! Three-mode gradual analyzer for a small Lua-like language.
//!
//! Supported syntax: local declarations, assignments, table literals, dot
//! field access, `+`, function definitions and calls, `if`/`then`/`end`,
//! `require("<module>")`, the data-model root identifier `game`, and a
//! first-line `--!<mode>` pragma.
//!
//! Modes:
//!
//! - `nocheck` reports syntax errors only (the default);
//! - `nonstrict` adds the high-confidence kinds: unknown symbol/property/
//!   require, arity mismatch, calling a non-function, indexing a non-table;
//! - `strict` reports everything, including type mismatches, optional-value
//!   access, sealed-table extension, missing return paths, missing table
//!   properties, and import-cycle breaks, with the data-model root typed
//!   opaque so every un-cast `game` access is a mismatch.
//!
//! A second, invisible background analysis applies strict rules to every
//! module regardless of pragma, but types the data-model root dynamic, so
//! its error set can differ from visible strict exactly on `game`-rooted
//! accesses.

pub mod ast;
mod checker;
mod graph;
mod incremental;
mod parser;
pub mod project;
mod types;

use std::collections::BTreeMap;

pub use incremental::{AnalyzerError, ProjectState, SourceEdit};
pub use parser::parse_module;
pub use project::{parse_pragma, pragma_line, ModuleSource, Project};
pub use types::SimpleType;

use crate::kind::{AnalysisError, ErrorKind, ModuleId};
use crate::record::Mode;

/// Work limit for one checker pass over one module. The default is high
/// enough that ordinary modules never trip it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisBudget {
    pub max_steps: u64,
}

impl AnalysisBudget {
    pub fn new(max_steps: u64) -> AnalysisBudget {
        AnalysisBudget {
            max_steps: max_steps.max(1),
        }
    }
}

impl Default for AnalysisBudget {
    fn default() -> Self {
        AnalysisBudget {
            max_steps: 1_000_000,
        }
    }
}

/// Kinds a nonstrict check is allowed to surface (besides syntax errors and
/// work-limit failures, which every checking mode reports).
const NONSTRICT_KINDS: [ErrorKind; 6] = [
    ErrorKind::UnknownSymbol,
    ErrorKind::UnknownProperty,
    ErrorKind::UnknownRequire,
    ErrorKind::CountMismatch,
    ErrorKind::CannotCallNonFunction,
    ErrorKind::NotATable,
];

pub(crate) fn filter_for_mode(mode: Mode, errors: &[AnalysisError]) -> Vec<AnalysisError> {
    match mode {
        Mode::Nocheck => Vec::new(),
        Mode::Strict => errors.to_vec(),
        Mode::Nonstrict => errors
            .iter()
            .filter(|e| {
                NONSTRICT_KINDS.contains(&e.kind)
                    || e.kind == ErrorKind::SyntaxError
                    || e.kind.is_too_complex()
            })
            .cloned()
            .collect(),
    }
}

/// Check one module under an explicit mode, with full project context.
pub fn check_module(
    project: &Project,
    module: &ModuleId,
    mode: Mode,
    budget: AnalysisBudget,
) -> Result<Vec<AnalysisError>, AnalyzerError> {
    if !project.modules.contains_key(module) {
        return Err(AnalyzerError::UnknownModule(module.clone()));
    }
    let state = ProjectState::new(project.clone(), budget);
    Ok(state.errors_for_mode(module, mode))
}

/// The invisible forced-strict pass over every module.
pub fn background_check(
    project: &Project,
    budget: AnalysisBudget,
) -> BTreeMap<ModuleId, Vec<AnalysisError>> {
    ProjectState::new(project.clone(), budget).background_error_map()
}

#[cfg(test)]
fn strict_with_dynamic_root(
    project: &Project,
    budget: AnalysisBudget,
) -> BTreeMap<ModuleId, Vec<AnalysisError>> {
    // Visible dependency rules but a dynamic data-model root: differs from
    // visible strict exactly on game-rooted errors. Used to verify that the
    // strict-vs-background gap is game-rooted and nothing else.
    use crate::analyzer::checker::{check_chunk, CheckInput};
    use std::collections::BTreeSet;

    let module_ids: BTreeSet<ModuleId> = project.modules.keys().cloned().collect();
    let parsed: BTreeMap<ModuleId, _> = project
        .modules
        .iter()
        .map(|(id, src)| (id.clone(), parse_module(id, &src.lines)))
        .collect();
    let raw: BTreeMap<ModuleId, Vec<ModuleId>> = parsed
        .iter()
        .map(|(id, (chunk, _))| (id.clone(), ast::collect_requires(chunk)))
        .collect();
    let graph = graph::ImportGraph::build(&module_ids, &raw);
    let mut exports: BTreeMap<ModuleId, SimpleType> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for id in graph.topo_order() {
        let (chunk, syntax) = &parsed[&id];
        let dep_exports: BTreeMap<ModuleId, SimpleType> = graph
            .kept_deps(&id)
            .map(|dep| {
                let ty = if project.modules[dep].pragma_mode() == Mode::Nocheck {
                    SimpleType::Dynamic
                } else {
                    exports[dep].clone()
                };
                (dep.clone(), ty)
            })
            .collect();
        let outcome = check_chunk(CheckInput {
            module: &id,
            chunk,
            line_count: project.modules[&id].lines.len() as u32,
            game_type: SimpleType::Dynamic,
            known_modules: &module_ids,
            removed_edges: graph.removed_edges(),
            dep_exports: &dep_exports,
            budget,
        });
        exports.insert(id.clone(), outcome.export.clone());
        let mut errors = syntax.clone();
        errors.extend(outcome.errors);
        out.insert(id.clone(), errors);
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::kind::ErrorKind;
    use std::collections::BTreeSet;

    pub(crate) const NONSTRICT_EXAMPLE: &str = "--!nonstrict\n\
        local x = { p = 5, q = nil }\n\
        if condition then x.q = 7 end\n\
        local y = x.p + x.q --> OK\n\
        local z = x.r      --> UnknownProperty";

    fn one_module_project(text: &str) -> (Project, ModuleId) {
        let mut project = Project::new();
        let id = ModuleId::new("main");
        project.insert_module(ModuleSource::from_text("main", text));
        (project, id)
    }

    fn kinds_at(errors: &[AnalysisError]) -> Vec<(ErrorKind, u32)> {
        errors.iter().map(|e| (e.kind, e.start_line)).collect()
    }

    #[test]
    fn worked_example_nonstrict_reports_one_unknown_property() {
        let (project, id) = one_module_project(NONSTRICT_EXAMPLE);
        let errors =
            check_module(&project, &id, Mode::Nonstrict, AnalysisBudget::default()).unwrap();
        assert_eq!(kinds_at(&errors), vec![(ErrorKind::UnknownProperty, 5)]);
    }

    #[test]
    fn worked_example_strict_adds_a_type_mismatch() {
        let strict_text = NONSTRICT_EXAMPLE.replace("--!nonstrict", "--!strict");
        let (project, id) = one_module_project(&strict_text);
        let errors = check_module(&project, &id, Mode::Strict, AnalysisBudget::default()).unwrap();
        assert_eq!(
            kinds_at(&errors),
            vec![
                (ErrorKind::TypeMismatch, 4),
                (ErrorKind::UnknownProperty, 5)
            ]
        );
    }

    #[test]
    fn worked_example_nocheck_reports_nothing() {
        let (project, id) = one_module_project(NONSTRICT_EXAMPLE);
        let errors = check_module(&project, &id, Mode::Nocheck, AnalysisBudget::default()).unwrap();
        assert!(errors.is_empty());
    }

    #[test]
    fn unknown_require_and_arity_and_call_checks() {
        let text = "--!nonstrict\n\
            local dep = require(\"nosuch\")\n\
            function add(a, b) return a + b end\n\
            local s = add(1)\n\
            local n = 5\n\
            local v = n(1)\n\
            local w = n.hp";
        let (project, id) = one_module_project(text);
        let errors =
            check_module(&project, &id, Mode::Nonstrict, AnalysisBudget::default()).unwrap();
        assert_eq!(
            kinds_at(&errors),
            vec![
                (ErrorKind::UnknownRequire, 2),
                (ErrorKind::CountMismatch, 4),
                (ErrorKind::CannotCallNonFunction, 6),
                (ErrorKind::NotATable, 7),
            ]
        );
    }

    #[test]
    fn strict_only_kinds_are_suppressed_in_nonstrict() {
        let text = "--!strict\n\
            local t = { hp = 1 }\n\
            t.sp = 2\n\
            function f(a) if a then return 1 end end\n\
            local o = nil\n\
            if flag then o = { v = 1 } end\n\
            local u = o.v\n\
            t = { other = 3 }";
        let (project, id) = one_module_project(text);
        let strict = check_module(&project, &id, Mode::Strict, AnalysisBudget::default()).unwrap();
        let strict_kinds: BTreeSet<ErrorKind> = strict.iter().map(|e| e.kind).collect();
        assert!(strict_kinds.contains(&ErrorKind::CannotExtendTable));
        assert!(strict_kinds.contains(&ErrorKind::FunctionExitsWithoutReturning));
        assert!(strict_kinds.contains(&ErrorKind::OptionalValueAccess));
        assert!(strict_kinds.contains(&ErrorKind::MissingProperties));
        let nonstrict =
            check_module(&project, &id, Mode::Nonstrict, AnalysisBudget::default()).unwrap();
        assert!(nonstrict.is_empty(), "{nonstrict:?}");
    }

    #[test]
    fn game_access_is_strict_only_and_invisible_to_background() {
        let text = "--!strict\nlocal gravity = game.Workspace";
        let (mut project, id) = one_module_project(text);
        project.data_model.insert("Workspace".into());
        let strict = check_module(&project, &id, Mode::Strict, AnalysisBudget::default()).unwrap();
        assert_eq!(kinds_at(&strict), vec![(ErrorKind::TypeMismatch, 2)]);
        let background = background_check(&project, AnalysisBudget::default());
        assert!(background[&id].is_empty());
    }

    #[test]
    fn background_sees_errors_hidden_by_nocheck() {
        let (project, id) = one_module_project("local v = missing_name");
        let visible = check_module(&project, &id, Mode::Nocheck, AnalysisBudget::default()).unwrap();
        assert!(visible.is_empty());
        let background = background_check(&project, AnalysisBudget::default());
        assert_eq!(kinds_at(&background[&id]), vec![(ErrorKind::UnknownSymbol, 1)]);
    }

    #[test]
    fn strict_does_not_analyze_nocheck_imports_but_background_does() {
        let mut project = Project::new();
        project.insert_module(ModuleSource::from_text(
            "lib",
            "local t = { greeting = \"hey\" }\nreturn t",
        ));
        project.insert_module(ModuleSource::from_text(
            "app",
            "--!strict\nlocal lib = require(\"lib\")\nlocal n = lib.greeting + 1",
        ));
        let app = ModuleId::new("app");
        let strict =
            check_module(&project, &app, Mode::Strict, AnalysisBudget::default()).unwrap();
        assert!(strict.is_empty(), "nocheck import must stay unanalyzed: {strict:?}");
        let background = background_check(&project, AnalysisBudget::default());
        assert_eq!(
            kinds_at(&background[&app]),
            vec![(ErrorKind::TypeMismatch, 3)]
        );
    }

    #[test]
    fn import_cycles_break_deterministically_with_one_error_per_removed_edge() {
        let mut project = Project::new();
        project.insert_module(ModuleSource::from_text(
            "aa",
            "--!strict\nlocal other = require(\"bb\")\nreturn { v = 1 }",
        ));
        project.insert_module(ModuleSource::from_text(
            "bb",
            "--!strict\nlocal other = require(\"aa\")\nreturn { v = 2 }",
        ));
        let aa = ModuleId::new("aa");
        let bb = ModuleId::new("bb");
        // Edge (bb, aa) is lexicographically greatest, so bb carries the error.
        let aa_errors = check_module(&project, &aa, Mode::Strict, AnalysisBudget::default()).unwrap();
        assert!(aa_errors.is_empty(), "{aa_errors:?}");
        let bb_errors = check_module(&project, &bb, Mode::Strict, AnalysisBudget::default()).unwrap();
        assert_eq!(
            kinds_at(&bb_errors),
            vec![(ErrorKind::ModuleHasCyclicDependency, 2)]
        );
    }

    /// A table literal nested `depth` deep, on one line.
    pub(crate) fn nested_table_module(depth: usize) -> String {
        let mut literal = String::from("1");
        for i in 0..depth {
            literal = format!("{{ f{i} = {literal} }}");
        }
        format!("--!strict\nlocal t = {literal}")
    }

    #[test]
    fn nested_tables_trip_a_tiny_budget_with_one_too_complex_error() {
        // double the nesting until the work limit trips
        let mut depth = 1;
        loop {
            let (project, id) = one_module_project(&nested_table_module(depth));
            let errors =
                check_module(&project, &id, Mode::Strict, AnalysisBudget::new(10)).unwrap();
            if !errors.is_empty() {
                assert_eq!(kinds_at(&errors), vec![(ErrorKind::CodeTooComplex, 1)]);
                return;
            }
            depth *= 2;
            assert!(depth <= 1 << 20, "budget never tripped");
        }
    }

    #[test]
    fn budget_is_monotone_below_the_trip_point() {
        let text = "--!strict\nlocal t = { hp = 1 }\nlocal y = t.hp + t.mp";
        let (project, id) = one_module_project(text);
        let big = check_module(&project, &id, Mode::Strict, AnalysisBudget::new(100_000)).unwrap();
        let bigger =
            check_module(&project, &id, Mode::Strict, AnalysisBudget::new(200_000)).unwrap();
        assert!(!big.iter().any(|e| e.kind.is_too_complex()));
        assert_eq!(big, bigger);
    }

    /// Shared corpus of small generated projects covering every construct;
    /// used by the monotonicity and background-law tests.
    pub(crate) fn corpus_projects() -> Vec<Project> {
        use crate::sim::generate::{gen_random_scenario, GenParams};
        let mut projects = Vec::new();
        for seed in 0..12u64 {
            let scenario = gen_random_scenario(
                seed,
                &GenParams {
                    n_modules: 5,
                    n_actions: 0,
                    typo_rate: 0.4,
                    ..GenParams::default()
                },
            );
            projects.push(scenario.project);
        }
        projects
    }

    pub(crate) fn multiset(
        errors: &[AnalysisError],
    ) -> BTreeMap<(ErrorKind, u32, u32), usize> {
        let mut out = BTreeMap::new();
        for e in errors {
            *out.entry((e.kind, e.start_line, e.end_line)).or_default() += 1;
        }
        out
    }

    pub(crate) fn is_submultiset(
        a: &BTreeMap<(ErrorKind, u32, u32), usize>,
        b: &BTreeMap<(ErrorKind, u32, u32), usize>,
    ) -> bool {
        a.iter().all(|(k, n)| b.get(k).copied().unwrap_or(0) >= *n)
    }

    #[test]
    fn modes_are_monotone_over_the_corpus() {
        let budget = AnalysisBudget::default();
        for project in corpus_projects() {
            for id in project.modules.keys() {
                let nocheck = multiset(&check_module(&project, id, Mode::Nocheck, budget).unwrap());
                let nonstrict =
                    multiset(&check_module(&project, id, Mode::Nonstrict, budget).unwrap());
                let strict = multiset(&check_module(&project, id, Mode::Strict, budget).unwrap());
                assert!(is_submultiset(&nocheck, &nonstrict), "module {id}");
                assert!(is_submultiset(&nonstrict, &strict), "module {id}");
            }
        }
    }

    #[test]
    fn strict_minus_background_is_exactly_game_rooted() {
        let budget = AnalysisBudget::default();
        for project in corpus_projects() {
            let background = background_check(&project, budget);
            let no_root = strict_with_dynamic_root(&project, budget);
            for id in project.modules.keys() {
                let strict = check_module(&project, id, Mode::Strict, budget).unwrap();
                let strict_ms = multiset(&strict);
                let bg_ms = multiset(&background[id]);
                let noroot_ms = multiset(&no_root[id]);
                // background must cover everything strict reports away from
                // the data-model root
                assert!(
                    is_submultiset(&noroot_ms, &bg_ms),
                    "module {id}: background lost a non-root error"
                );
                // and the strict-minus-background gap must vanish once the
                // root is typed dynamic
                for (key, n) in &strict_ms {
                    let in_bg = bg_ms.get(key).copied().unwrap_or(0);
                    let in_noroot = noroot_ms.get(key).copied().unwrap_or(0);
                    let gap = n.saturating_sub(in_bg);
                    let root_attributable = n.saturating_sub(in_noroot);
                    assert!(
                        gap <= root_attributable,
                        "module {id}: {key:?} gap {gap} exceeds root-attributable {root_attributable}"
                    );
                }
            }
        }
    }

    #[test]
    fn incremental_results_match_fresh_analysis_after_random_edits() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let budget = AnalysisBudget::default();
        let projects = corpus_projects();
        for seed in 0..6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let project = &projects[seed as usize % projects.len()];
            let mut state = ProjectState::new(project.clone(), budget);
            for _ in 0..12 {
                let ids: Vec<ModuleId> = state.project().modules.keys().cloned().collect();
                let id = ids[rng.random_range(0..ids.len())].clone();
                let len = state.project().modules[&id].lines.len() as u32;
                let edit = match rng.random_range(0..3u8) {
                    0 => SourceEdit::Insert {
                        at_line: rng.random_range(1..=len + 1),
                        lines: vec![format!("local extra{} = 1", rng.random_range(0..90))],
                    },
                    1 if len > 1 => SourceEdit::Delete {
                        from_line: rng.random_range(2..=len),
                        n_lines: 1,
                    },
                    _ => SourceEdit::Replace {
                        from_line: rng.random_range(1..=len.max(1)),
                        lines: vec!["local patched = 3".to_string()],
                    },
                };
                if state.apply_edit(&id, &edit).is_err() {
                    continue;
                }
                state.refresh();
                let fresh = ProjectState::new(state.project().clone(), budget);
                assert_eq!(
                    state.visible_error_map(),
                    fresh.visible_error_map(),
                    "seed {seed}: incremental visible results diverged"
                );
                assert_eq!(
                    state.background_error_map(),
                    fresh.background_error_map(),
                    "seed {seed}: incremental background results diverged"
                );
            }
        }
    }
}
