//! Deterministic random scenario generator.
//!
//! Generated projects are a few library modules (sealed export tables,
//! occasionally a require cycle) plus script modules that the action stream
//! edits. Templates cover the whole analyzer surface: table literals,
//! conditional field writes that make fields optional, arithmetic on those
//! fields, function arity, data-model access, requires, sealed-table
//! extension, and table reassignment.
//!
//! `typo_rate` gates the error-injection templates (unbound names, bad
//! properties, bad requires, wrong arity, calling/indexing non-functions,
//! unterminated strings). At rate zero the generated code stays fully
//! bound: deletes only ever remove lines whose definitions nothing else
//! uses, and rewrites keep the defined name.
//!
//! Every generated identifier, module id, and asset name is checked against
//! the wire vocabulary so the privacy audit stays meaningful.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::analyzer::project::{pragma_line, ModuleSource};
use crate::kind::ModuleId;
use crate::record::Mode;
use crate::sim::script::{Action, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n_modules: usize,
    pub n_actions: usize,
    /// Probabilities for nocheck / nonstrict / strict module pragmas.
    pub mode_mix: [f64; 3],
    /// Probability that an edit or seed statement injects an error.
    pub typo_rate: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_modules: 6,
            n_actions: 200,
            mode_mix: [0.90, 0.095, 0.005],
            typo_rate: 0.15,
        }
    }
}

const WORDS: [&str; 12] = [
    "fern", "kelp", "newt", "wren", "moss", "birch", "otter", "heron", "maple", "cedar", "lark",
    "finch",
];

const ASSETS: [&str; 6] = [
    "FogLantern",
    "MossArena",
    "KelpGarden",
    "StoneRig",
    "EchoValley",
    "DriftPlaza",
];

#[derive(Debug, Clone, PartialEq)]
enum VarKind {
    Num,
    Str,
    Dyn,
    Table {
        num_fields: Vec<String>,
        opt_fields: Vec<String>,
        open: bool,
    },
    Func {
        arity: usize,
    },
    Import {
        lib: ModuleId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LineForm {
    Pragma,
    NumDef,
    Typo,
    Other,
    Return,
}

#[derive(Debug, Clone)]
struct GenLine {
    text: String,
    defines: Vec<String>,
    uses: Vec<String>,
    form: LineForm,
}

#[derive(Debug, Clone)]
struct GenModule {
    id: ModuleId,
    lines: Vec<GenLine>,
    vars: BTreeMap<String, VarKind>,
    /// Export fields, for library modules.
    exports: Vec<String>,
}

impl GenModule {
    fn line_count(&self) -> u32 {
        self.lines.len() as u32
    }

    fn source(&self) -> ModuleSource {
        ModuleSource {
            id: self.id.clone(),
            lines: self.lines.iter().map(|l| l.text.clone()).collect(),
        }
    }

    fn tables(&self) -> Vec<(String, Vec<String>, Vec<String>, bool)> {
        self.vars
            .iter()
            .filter_map(|(name, kind)| match kind {
                VarKind::Table {
                    num_fields,
                    opt_fields,
                    open,
                } => Some((name.clone(), num_fields.clone(), opt_fields.clone(), *open)),
                _ => None,
            })
            .collect()
    }

    fn vars_of<F: Fn(&VarKind) -> bool>(&self, pred: F) -> Vec<String> {
        self.vars
            .iter()
            .filter(|(_, k)| pred(k))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn typo_line_indexes(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.form == LineForm::Typo)
            .map(|(i, _)| i)
            .collect()
    }

    /// Lines that can be deleted without unbinding anything used elsewhere.
    fn deletable_indexes(&self) -> Vec<usize> {
        (0..self.lines.len())
            .filter(|&i| {
                let line = &self.lines[i];
                if matches!(line.form, LineForm::Pragma | LineForm::Return) {
                    return false;
                }
                line.defines.iter().all(|name| {
                    !self
                        .lines
                        .iter()
                        .enumerate()
                        .any(|(j, other)| j != i && other.uses.contains(name))
                })
            })
            .collect()
    }

    fn remove_line(&mut self, index: usize) {
        let line = self.lines.remove(index);
        for name in line.defines {
            self.vars.remove(&name);
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    typo_rate: f64,
    fresh: u32,
}

impl Gen {
    fn word(&mut self) -> &'static str {
        WORDS[self.rng.random_range(0..WORDS.len())]
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        let name = format!("{prefix}{}{}", self.word(), self.fresh);
        debug_assert!(
            !crate::privacy::collides_with_vocabulary(&name),
            "generated identifier {name:?} collides with the wire vocabulary"
        );
        name
    }

    fn int(&mut self) -> u32 {
        self.rng.random_range(1..100)
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.random::<f64>() < p
    }
}

fn draw_mode(rng: &mut ChaCha8Rng, mix: &[f64; 3]) -> Mode {
    let r: f64 = rng.random();
    if r < mix[0] {
        Mode::Nocheck
    } else if r < mix[0] + mix[1] {
        Mode::Nonstrict
    } else {
        Mode::Strict
    }
}

/// Statements appended to a script module: the text block (possibly several
/// lines) plus shadow bookkeeping.
fn gen_statement(gen: &mut Gen, module: &mut GenModule, libs: &[GenModule]) -> Vec<GenLine> {
    if gen.chance(gen.typo_rate) {
        return gen_typo_statement(gen, module);
    }
    let tables = module.tables();
    let funcs: Vec<(String, usize)> = module
        .vars
        .iter()
        .filter_map(|(n, k)| match k {
            VarKind::Func { arity } => Some((n.clone(), *arity)),
            _ => None,
        })
        .collect();
    let choice = gen.rng.random_range(0..12u8);
    match choice {
        0 | 1 => num_def(gen, module),
        2 => {
            let name = gen.fresh_name("s_");
            let word = gen.word();
            let line = GenLine {
                text: format!("local {name} = \"{word}\""),
                defines: vec![name.clone()],
                uses: vec![],
                form: LineForm::Other,
            };
            module.vars.insert(name, VarKind::Str);
            vec![line]
        }
        3 => {
            // sealed table with one numeric and one nil-seeded field
            let name = gen.fresh_name("t_");
            let f1 = gen.fresh_name("hp_");
            let f2 = gen.fresh_name("sp_");
            let n = gen.int();
            let line = GenLine {
                text: format!("local {name} = {{ {f1} = {n}, {f2} = nil }}"),
                defines: vec![name.clone()],
                uses: vec![],
                form: LineForm::Other,
            };
            module.vars.insert(
                name,
                VarKind::Table {
                    num_fields: vec![f1],
                    opt_fields: vec![f2],
                    open: false,
                },
            );
            vec![line]
        }
        4 if !tables.is_empty() => {
            // write an existing field, or a fresh one when the table is open
            let (name, nums, opts, open) = pick(gen, &tables);
            let n = gen.int();
            if open && gen.chance(0.5) {
                let field = gen.fresh_name("fx_");
                let text = format!("{name}.{field} = {n}");
                if let Some(VarKind::Table { num_fields, .. }) = module.vars.get_mut(&name) {
                    num_fields.push(field);
                }
                return vec![GenLine {
                    text,
                    defines: vec![],
                    uses: vec![name],
                    form: LineForm::Other,
                }];
            }
            let all: Vec<String> = nums.iter().chain(opts.iter()).cloned().collect();
            if all.is_empty() {
                return num_def(gen, module);
            }
            let field = pick(gen, &all);
            // unconditional write makes the field numeric again
            if let Some(VarKind::Table {
                num_fields,
                opt_fields,
                ..
            }) = module.vars.get_mut(&name)
            {
                opt_fields.retain(|f| f != &field);
                if !num_fields.contains(&field) {
                    num_fields.push(field.clone());
                }
            }
            vec![GenLine {
                text: format!("{name}.{field} = {n}"),
                defines: vec![],
                uses: vec![name],
                form: LineForm::Other,
            }]
        }
        5 if !tables.is_empty() => {
            // conditional write under an ambient flag: field becomes optional
            let (name, nums, opts, _) = pick(gen, &tables);
            let all: Vec<String> = nums.iter().chain(opts.iter()).cloned().collect();
            if all.is_empty() {
                return num_def(gen, module);
            }
            let field = pick(gen, &all);
            let flag = gen.fresh_name("flag");
            let n = gen.int();
            if let Some(VarKind::Table {
                num_fields,
                opt_fields,
                ..
            }) = module.vars.get_mut(&name)
            {
                num_fields.retain(|f| f != &field);
                if !opt_fields.contains(&field) {
                    opt_fields.push(field.clone());
                }
            }
            vec![GenLine {
                text: format!("if {flag} then {name}.{field} = {n} end"),
                defines: vec![],
                uses: vec![name],
                form: LineForm::Other,
            }]
        }
        6 if !tables.is_empty() => {
            // arithmetic over a table field; optional fields make strict complain
            let (name, nums, opts, _) = pick(gen, &tables);
            let all: Vec<String> = nums.iter().chain(opts.iter()).cloned().collect();
            if all.is_empty() {
                return num_def(gen, module);
            }
            let field = pick(gen, &all);
            let v = gen.fresh_name("n_");
            let n = gen.int();
            let line = GenLine {
                text: format!("local {v} = {name}.{field} + {n}"),
                defines: vec![v.clone()],
                uses: vec![name],
                form: LineForm::Other,
            };
            module.vars.insert(v, VarKind::Num);
            vec![line]
        }
        7 => {
            // function definition; sometimes with a non-returning path
            let f = gen.fresh_name("fn_");
            if gen.chance(0.3) {
                let line = GenLine {
                    text: format!("function {f}(ax) if ax then return 1 end end"),
                    defines: vec![f.clone()],
                    uses: vec![],
                    form: LineForm::Other,
                };
                module.vars.insert(f, VarKind::Func { arity: 1 });
                vec![line]
            } else {
                let line = GenLine {
                    text: format!("function {f}(ax, bx) return ax + bx end"),
                    defines: vec![f.clone()],
                    uses: vec![],
                    form: LineForm::Other,
                };
                module.vars.insert(f, VarKind::Func { arity: 2 });
                vec![line]
            }
        }
        8 if !funcs.is_empty() => {
            let (f, arity) = pick(gen, &funcs);
            let v = gen.fresh_name("r_");
            let args = (0..arity)
                .map(|_| gen.int().to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let line = GenLine {
                text: format!("local {v} = {f}({args})"),
                defines: vec![v.clone()],
                uses: vec![f],
                form: LineForm::Other,
            };
            module.vars.insert(v, VarKind::Dyn);
            vec![line]
        }
        9 => {
            // data-model access: a strict-only complaint by design
            let v = gen.fresh_name("a_");
            let asset = ASSETS[gen.rng.random_range(0..ASSETS.len())];
            let line = GenLine {
                text: format!("local {v} = game.{asset}"),
                defines: vec![v.clone()],
                uses: vec![],
                form: LineForm::Other,
            };
            module.vars.insert(v, VarKind::Dyn);
            vec![line]
        }
        10 if !libs.is_empty() => {
            let lib = &libs[gen.rng.random_range(0..libs.len())];
            let v = gen.fresh_name("m_");
            let mut out = vec![GenLine {
                text: format!("local {v} = require(\"{}\")", lib.id),
                defines: vec![v.clone()],
                uses: vec![],
                form: LineForm::Other,
            }];
            module
                .vars
                .insert(v.clone(), VarKind::Import { lib: lib.id.clone() });
            if !lib.exports.is_empty() && gen.chance(0.7) {
                let field = pick(gen, &lib.exports);
                let w = gen.fresh_name("u_");
                out.push(GenLine {
                    text: format!("local {w} = {v}.{field}"),
                    defines: vec![w.clone()],
                    uses: vec![v],
                    form: LineForm::Other,
                });
                module.vars.insert(w, VarKind::Dyn);
            }
            out
        }
        11 if !tables.is_empty() && gen.chance(0.5) => {
            // reassign a sealed table with a smaller literal
            let (name, nums, _, open) = pick(gen, &tables);
            if open || nums.is_empty() {
                return num_def(gen, module);
            }
            let field = gen.fresh_name("alt_");
            let n = gen.int();
            module.vars.insert(
                name.clone(),
                VarKind::Table {
                    num_fields: vec![field.clone()],
                    opt_fields: vec![],
                    open: false,
                },
            );
            vec![GenLine {
                text: format!("{name} = {{ {field} = {n} }}"),
                defines: vec![],
                uses: vec![name],
                form: LineForm::Other,
            }]
        }
        11 => {
            // optional-table block: nil seed, conditional init, access
            let o = gen.fresh_name("o_");
            let field = gen.fresh_name("v_");
            let w = gen.fresh_name("w_");
            let flag = gen.fresh_name("flag");
            let n = gen.int();
            let lines = vec![
                GenLine {
                    text: format!("local {o} = nil"),
                    defines: vec![o.clone()],
                    uses: vec![],
                    form: LineForm::Other,
                },
                GenLine {
                    text: format!("if {flag} then {o} = {{ {field} = {n} }} end"),
                    defines: vec![],
                    uses: vec![o.clone()],
                    form: LineForm::Other,
                },
                GenLine {
                    text: format!("local {w} = {o}.{field}"),
                    defines: vec![w.clone()],
                    uses: vec![o.clone()],
                    form: LineForm::Other,
                },
            ];
            module.vars.insert(o, VarKind::Dyn);
            module.vars.insert(w, VarKind::Dyn);
            lines
        }
        _ => num_def(gen, module),
    }
}

fn num_def(gen: &mut Gen, module: &mut GenModule) -> Vec<GenLine> {
    let name = gen.fresh_name("n_");
    let n = gen.int();
    let line = GenLine {
        text: format!("local {name} = {n}"),
        defines: vec![name.clone()],
        uses: vec![],
        form: LineForm::NumDef,
    };
    module.vars.insert(name, VarKind::Num);
    vec![line]
}

fn gen_typo_statement(gen: &mut Gen, module: &mut GenModule) -> Vec<GenLine> {
    let tables = module.tables();
    let nums = module.vars_of(|k| matches!(k, VarKind::Num));
    let funcs: Vec<(String, usize)> = module
        .vars
        .iter()
        .filter_map(|(n, k)| match k {
            VarKind::Func { arity } => Some((n.clone(), *arity)),
            _ => None,
        })
        .collect();
    let imports = module.vars_of(|k| matches!(k, VarKind::Import { .. }));
    let choice = gen.rng.random_range(0..7u8);
    let v = gen.fresh_name("x_");
    let (text, defines, uses) = match choice {
        // property that is not there
        2 if !tables.is_empty() || !imports.is_empty() => {
            let target = if !tables.is_empty() && (imports.is_empty() || gen.chance(0.6)) {
                pick(gen, &tables).0
            } else {
                pick(gen, &imports)
            };
            let bad = gen.fresh_name("zz_");
            (
                format!("local {v} = {target}.{bad}"),
                vec![v.clone()],
                vec![target],
            )
        }
        // import of a module that does not exist
        3 => {
            let ghost = gen.fresh_name("lost_");
            (
                format!("local {v} = require(\"{ghost}\")"),
                vec![v.clone()],
                vec![],
            )
        }
        // wrong arity
        4 if !funcs.is_empty() => {
            let (f, arity) = pick(gen, &funcs);
            let args = (0..arity + 1)
                .map(|_| gen.int().to_string())
                .collect::<Vec<_>>()
                .join(", ");
            (
                format!("local {v} = {f}({args})"),
                vec![v.clone()],
                vec![f],
            )
        }
        // calling or indexing a number
        5 if !nums.is_empty() => {
            let n = pick(gen, &nums);
            let text = if gen.chance(0.5) {
                format!("local {v} = {n}(1)")
            } else {
                format!("local {v} = {n}.misfield")
            };
            (text, vec![v.clone()], vec![n])
        }
        // unterminated string: a syntax error; defines nothing
        6 => {
            let word = gen.word();
            (format!("local {v} = \"{word}"), vec![], vec![])
        }
        // unbound identifier
        _ => {
            let ghost = gen.fresh_name("ghost_");
            (format!("local {v} = {ghost}"), vec![v.clone()], vec![])
        }
    };
    for name in &defines {
        module.vars.insert(name.clone(), VarKind::Dyn);
    }
    vec![GenLine {
        text,
        defines,
        uses,
        form: LineForm::Typo,
    }]
}

fn pick<T: Clone>(gen: &mut Gen, items: &[T]) -> T {
    items[gen.rng.random_range(0..items.len())].clone()
}

/// Generate a scenario: deterministic for a given (seed, params) pair.
pub fn gen_random_scenario(seed: u64, params: &GenParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7E1E_17E1_E7E1_1E77);
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(rng.random()),
        typo_rate: params.typo_rate,
        fresh: 0,
    };

    let n_modules = params.n_modules.max(1);
    let n_libs = if n_modules >= 3 {
        (n_modules / 3).min(2)
    } else {
        0
    };

    // Library modules: sealed export table plus a return.
    let mut libs: Vec<GenModule> = Vec::new();
    for i in 0..n_libs {
        let id = ModuleId::new(format!("lib_{}{i}", gen.word()));
        let mode = draw_mode(&mut rng, &params.mode_mix);
        let api = gen.fresh_name("api_");
        let f1 = gen.fresh_name("get_");
        let f2 = gen.fresh_name("max_");
        let n = gen.int();
        let word = gen.word();
        let mut lines = vec![GenLine {
            text: pragma_line(mode),
            defines: vec![],
            uses: vec![],
            form: LineForm::Pragma,
        }];
        lines.push(GenLine {
            text: format!("local {api} = {{ {f1} = {n}, {f2} = \"{word}\" }}"),
            defines: vec![api.clone()],
            uses: vec![],
            form: LineForm::Other,
        });
        lines.push(GenLine {
            text: format!("return {api}"),
            defines: vec![],
            uses: vec![api.clone()],
            form: LineForm::Return,
        });
        let mut vars = BTreeMap::new();
        vars.insert(
            api,
            VarKind::Table {
                num_fields: vec![f1.clone()],
                opt_fields: vec![],
                open: false,
            },
        );
        libs.push(GenModule {
            id,
            lines,
            vars,
            exports: vec![f1, f2],
        });
    }
    // occasionally a require cycle between the two libraries
    if libs.len() == 2 && gen.chance(0.15) {
        let (a, b) = (libs[0].id.clone(), libs[1].id.clone());
        let pa = gen.fresh_name("peer_");
        let pb = gen.fresh_name("peer_");
        libs[0].lines.insert(
            1,
            GenLine {
                text: format!("local {pa} = require(\"{b}\")"),
                defines: vec![pa.clone()],
                uses: vec![],
                form: LineForm::Other,
            },
        );
        libs[0].vars.insert(pa, VarKind::Dyn);
        libs[1].lines.insert(
            1,
            GenLine {
                text: format!("local {pb} = require(\"{a}\")"),
                defines: vec![pb.clone()],
                uses: vec![],
                form: LineForm::Other,
            },
        );
        libs[1].vars.insert(pb, VarKind::Dyn);
    }

    // Script modules, seeded with a few statements.
    let mut scripts: Vec<GenModule> = Vec::new();
    for i in 0..n_modules.saturating_sub(n_libs) {
        let id = ModuleId::new(format!("app_{}{i}", gen.word()));
        let mode = draw_mode(&mut rng, &params.mode_mix);
        let mut module = GenModule {
            id,
            lines: vec![GenLine {
                text: pragma_line(mode),
                defines: vec![],
                uses: vec![],
                form: LineForm::Pragma,
            }],
            vars: BTreeMap::new(),
            exports: vec![],
        };
        for _ in 0..gen.rng.random_range(2..=4usize) {
            let lines = gen_statement(&mut gen, &mut module, &libs);
            module.lines.extend(lines);
        }
        scripts.push(module);
    }

    let mut assets: Vec<&str> = ASSETS.to_vec();
    let keep = gen.rng.random_range(3..=assets.len());
    assets.truncate(keep);

    // Snapshot the seed state now; the shadow modules below track the
    // post-edit state the runner will reproduce.
    let seed_sources: Vec<ModuleSource> = libs
        .iter()
        .chain(scripts.iter())
        .map(|m| m.source())
        .collect();

    // Action stream over the scripts.
    let mut actions: Vec<Action> = Vec::new();
    let mut focus: usize = 0;
    if !scripts.is_empty() && params.n_actions > 0 {
        actions.push(Action::Open(scripts[0].id.clone()));
    }
    while actions.len() < params.n_actions && !scripts.is_empty() {
        let roll: f64 = gen.rng.random();
        let module = &mut scripts[focus];
        if roll < 0.55 {
            // append a statement block at the end
            let at_line = module.line_count() + 1;
            let lines = gen_statement(&mut gen, module, &libs);
            let text = lines
                .iter()
                .map(|l| l.text.clone())
                .collect::<Vec<_>>()
                .join("\n");
            module.lines.extend(lines);
            actions.push(Action::TypeText {
                module: module.id.clone(),
                line: at_line,
                text,
            });
        } else if roll < 0.65 {
            // rewrite a numeric definition in place
            let candidates: Vec<usize> = module
                .lines
                .iter()
                .enumerate()
                .filter(|(_, l)| l.form == LineForm::NumDef)
                .map(|(i, _)| i)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let index = pick(&mut gen, &candidates);
            let name = module.lines[index].defines[0].clone();
            let n = gen.int();
            let text = format!("local {name} = {n}");
            module.lines[index].text = text.clone();
            actions.push(Action::TypeText {
                module: module.id.clone(),
                line: index as u32 + 1,
                text,
            });
        } else if roll < 0.75 {
            // fix a typo line, if any
            let typos = module.typo_line_indexes();
            if typos.is_empty() {
                continue;
            }
            let index = pick(&mut gen, &typos);
            for name in std::mem::take(&mut module.lines[index].defines) {
                module.vars.remove(&name);
            }
            let fixed = gen.fresh_name("ok_");
            let n = gen.int();
            let text = format!("local {fixed} = {n}");
            module.lines[index] = GenLine {
                text: text.clone(),
                defines: vec![fixed.clone()],
                uses: vec![],
                form: LineForm::NumDef,
            };
            module.vars.insert(fixed, VarKind::Num);
            actions.push(Action::TypeText {
                module: module.id.clone(),
                line: index as u32 + 1,
                text,
            });
        } else if roll < 0.80 {
            let deletable = module.deletable_indexes();
            if deletable.is_empty() {
                continue;
            }
            let index = pick(&mut gen, &deletable);
            let line_no = index as u32 + 1;
            module.remove_line(index);
            actions.push(Action::Delete {
                module: module.id.clone(),
                from_line: line_no,
                n_lines: 1,
            });
        } else if roll < 0.83 {
            let mode = draw_mode(&mut rng, &params.mode_mix);
            module.lines[0].text = pragma_line(mode);
            actions.push(Action::SetMode {
                module: module.id.clone(),
                mode,
            });
        } else if roll < 0.95 && scripts.len() > 1 {
            let mut target = gen.rng.random_range(0..scripts.len());
            if target == focus {
                target = (target + 1) % scripts.len();
            }
            focus = target;
            actions.push(Action::Switch(scripts[focus].id.clone()));
        } else {
            actions.push(Action::Wait(gen.rng.random_range(50..3_000)));
        }
    }

    let mut scenario = Scenario::default();
    for source in seed_sources {
        scenario.project.insert_module(source);
    }
    scenario.project.data_model = assets.iter().map(|s| s.to_string()).collect();
    scenario.actions = actions;
    scenario
}
