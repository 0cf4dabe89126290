//! Flow-lite type checker over one module chunk.
//!
//! One pass computes the full (strict-level) error list; weaker analysis
//! modes are filters over that list, which makes mode monotonicity hold by
//! construction. The pass is parameterized by the type given to the
//! data-model root `game` (`Top` for the visible analysis, `Dynamic` for the
//! background one) and by the export types of dependencies.
//!
//! Inference rules, in brief:
//!
//! - non-empty table literals are sealed; `{}` is open and accumulates;
//! - a field write inside `if` merges old and new field types, so writing a
//!   number over a nil field yields `optional(number)`;
//! - reads of unbound names report `UnknownSymbol` once per name, except a
//!   bare identifier in `if` condition position, which is tolerated as a
//!   global truthiness test;
//! - `+` demands number-or-dynamic operands; anything else (including
//!   optionals) is a `TypeMismatch`;
//! - reassigning a sealed-table variable with a literal that lacks existing
//!   fields is `MissingProperties`; other class changes are `TypeMismatch`;
//! - call results are always dynamic (function types carry arity only).
//!
//! Work accounting: one unit per AST node visited plus one per type
//! equation solved. Exceeding the budget stops the walk and appends one
//! `CodeTooComplex` spanning the module.

use std::collections::{BTreeMap, BTreeSet};

use crate::analyzer::ast::{Chunk, Expr, ExprKind, Span, Stmt, StmtKind};
use crate::analyzer::types::{merge, optional_of, SimpleType, TableType, TypeClass};
use crate::analyzer::AnalysisBudget;
use crate::kind::{AnalysisError, ErrorKind, ModuleId};

pub(crate) struct CheckInput<'a> {
    pub module: &'a ModuleId,
    pub chunk: &'a Chunk,
    pub line_count: u32,
    pub game_type: SimpleType,
    pub known_modules: &'a BTreeSet<ModuleId>,
    pub removed_edges: &'a BTreeSet<(ModuleId, ModuleId)>,
    pub dep_exports: &'a BTreeMap<ModuleId, SimpleType>,
    pub budget: AnalysisBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CheckOutcome {
    pub errors: Vec<AnalysisError>,
    pub export: SimpleType,
    pub tripped: bool,
}

pub(crate) fn check_chunk(input: CheckInput<'_>) -> CheckOutcome {
    let mut checker = Checker {
        module: input.module,
        game_type: input.game_type,
        known_modules: input.known_modules,
        removed_edges: input.removed_edges,
        dep_exports: input.dep_exports,
        max_steps: input.budget.max_steps,
        steps: 0,
        tripped: false,
        scopes: vec![BTreeMap::new()],
        cond_depth: 0,
        fn_depth: 0,
        export: None,
        reported_cycles: BTreeSet::new(),
        errors: Vec::new(),
    };
    for stmt in &input.chunk.stmts {
        checker.check_stmt(stmt);
    }
    let mut errors = checker.errors;
    if checker.tripped {
        errors.push(AnalysisError::new(
            ErrorKind::CodeTooComplex,
            input.module.clone(),
            1,
            input.line_count.max(1),
        ));
    }
    CheckOutcome {
        errors,
        export: checker.export.unwrap_or(SimpleType::Dynamic),
        tripped: checker.tripped,
    }
}

struct Checker<'a> {
    module: &'a ModuleId,
    game_type: SimpleType,
    known_modules: &'a BTreeSet<ModuleId>,
    removed_edges: &'a BTreeSet<(ModuleId, ModuleId)>,
    dep_exports: &'a BTreeMap<ModuleId, SimpleType>,
    max_steps: u64,
    steps: u64,
    tripped: bool,
    scopes: Vec<BTreeMap<String, SimpleType>>,
    cond_depth: u32,
    fn_depth: u32,
    export: Option<SimpleType>,
    reported_cycles: BTreeSet<ModuleId>,
    errors: Vec<AnalysisError>,
}

impl<'a> Checker<'a> {
    fn consume(&mut self, units: u64) -> bool {
        if self.tripped {
            return false;
        }
        self.steps += units;
        if self.steps > self.max_steps {
            self.tripped = true;
            return false;
        }
        true
    }

    fn error(&mut self, kind: ErrorKind, span: Span) {
        self.errors.push(AnalysisError::new(
            kind,
            self.module.clone(),
            span.start_line,
            span.end_line,
        ));
    }

    fn lookup(&self, name: &str) -> Option<SimpleType> {
        self.scopes
            .iter()
            .rev()
            .find_map(|scope| scope.get(name).cloned())
    }

    fn bind_current(&mut self, name: &str, ty: SimpleType) {
        self.scopes
            .last_mut()
            .expect("scope stack never empty")
            .insert(name.to_string(), ty);
    }

    /// Unbound names are treated as globals: bind them at the bottom scope
    /// so each misspelling is reported once per analysis run.
    fn bind_global(&mut self, name: &str, ty: SimpleType) {
        self.scopes[0].insert(name.to_string(), ty);
    }

    fn rebind(&mut self, name: &str, ty: SimpleType) {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = ty;
                return;
            }
        }
        self.scopes[0].insert(name.to_string(), ty);
    }

    fn check_stmt(&mut self, stmt: &Stmt) {
        if !self.consume(1) {
            return;
        }
        match &stmt.kind {
            StmtKind::Local { name, value } => {
                let ty = match value {
                    Some(v) => self.infer(v),
                    None => SimpleType::Nil,
                };
                self.bind_current(name, ty);
            }
            StmtKind::AssignName { name, value } => {
                let t_new = self.infer(value);
                self.assign_name(name, t_new, stmt.span);
            }
            StmtKind::AssignField {
                object,
                field,
                value,
            } => {
                let t_obj = self.infer(object);
                let t_val = self.infer(value);
                self.field_write_check(t_obj, field, stmt.span);
                self.update_lvalue(object, field, t_val);
            }
            StmtKind::If { cond, body } => {
                match &cond.kind {
                    // A bare identifier used as a truthiness test may be an
                    // ambient global flag; tolerate it.
                    ExprKind::Name(n) if self.lookup(n).is_none() && n != "game" => {
                        self.consume(1);
                    }
                    _ => {
                        self.infer(cond);
                    }
                }
                self.cond_depth += 1;
                self.scopes.push(BTreeMap::new());
                for inner in body {
                    self.check_stmt(inner);
                }
                self.scopes.pop();
                self.cond_depth -= 1;
            }
            StmtKind::Function { name, params, body } => {
                self.bind_current(
                    name,
                    SimpleType::Function {
                        params: params.len(),
                    },
                );
                self.fn_depth += 1;
                self.scopes.push(BTreeMap::new());
                for param in params {
                    self.bind_current(param, SimpleType::Dynamic);
                }
                for inner in body {
                    self.check_stmt(inner);
                }
                self.scopes.pop();
                self.fn_depth -= 1;
                if !self.tripped && has_valued_return(body) && !definitely_returns(body) {
                    self.error(ErrorKind::FunctionExitsWithoutReturning, stmt.span);
                }
            }
            StmtKind::Return { value } => {
                let ty = match value {
                    Some(v) => self.infer(v),
                    None => SimpleType::Nil,
                };
                if self.fn_depth == 0 && self.cond_depth == 0 && self.export.is_none() {
                    self.export = Some(ty);
                }
            }
            StmtKind::ExprStmt { expr } => {
                self.infer(expr);
            }
        }
    }

    fn assign_name(&mut self, name: &str, t_new: SimpleType, span: Span) {
        if !self.consume(1) {
            return;
        }
        let Some(t_old) = self.lookup(name) else {
            self.error(ErrorKind::UnknownSymbol, span);
            self.bind_global(name, t_new);
            return;
        };
        let conditional = self.cond_depth > 0;
        if t_new == SimpleType::Nil {
            // Erasing a value is always allowed.
            let ty = if conditional {
                merge(t_old, SimpleType::Nil)
            } else {
                SimpleType::Nil
            };
            self.rebind(name, ty);
            return;
        }
        let old_class = t_old.class();
        let new_class = t_new.class();
        let exempt = matches!(
            old_class,
            TypeClass::Dynamic | TypeClass::Nil | TypeClass::Top
        ) || new_class == TypeClass::Dynamic;
        if !exempt {
            if old_class == TypeClass::Table && new_class == TypeClass::Table {
                if let (SimpleType::Table(old_t), SimpleType::Table(new_t)) = (&t_old, &t_new) {
                    if old_t.sealed
                        && old_t
                            .fields
                            .keys()
                            .any(|field| !new_t.fields.contains_key(field))
                    {
                        self.error(ErrorKind::MissingProperties, span);
                    }
                }
            } else if old_class != new_class {
                self.error(ErrorKind::TypeMismatch, span);
            }
        }
        let ty = if conditional {
            merge(t_old, t_new)
        } else {
            t_new
        };
        self.rebind(name, ty);
    }

    fn infer(&mut self, expr: &Expr) -> SimpleType {
        if !self.consume(1) {
            return SimpleType::Dynamic;
        }
        match &expr.kind {
            ExprKind::Number => SimpleType::Number,
            ExprKind::Str(_) => SimpleType::Str,
            ExprKind::Bool(_) => SimpleType::Boolean,
            ExprKind::Nil => SimpleType::Nil,
            ExprKind::Name(name) => match self.lookup(name) {
                Some(ty) => ty,
                None if name == "game" => self.game_type.clone(),
                None => {
                    self.error(ErrorKind::UnknownSymbol, expr.span);
                    self.bind_global(name, SimpleType::Dynamic);
                    SimpleType::Dynamic
                }
            },
            ExprKind::Field { base, name } => {
                let base_ty = self.infer(base);
                self.field_read(base_ty, name, expr.span)
            }
            ExprKind::Call { callee, args } => {
                let callee_ty = self.infer(callee);
                for arg in args {
                    self.infer(arg);
                }
                self.call_check(callee_ty, args.len(), expr.span)
            }
            ExprKind::Add { lhs, rhs } => {
                let lt = self.infer(lhs);
                let rt = self.infer(rhs);
                self.consume(1);
                if !lt.is_numeric_ok() {
                    self.error(ErrorKind::TypeMismatch, lhs.span);
                }
                if !rt.is_numeric_ok() {
                    self.error(ErrorKind::TypeMismatch, rhs.span);
                }
                SimpleType::Number
            }
            ExprKind::Table { fields } => {
                let mut map = BTreeMap::new();
                for (name, value) in fields {
                    let ty = self.infer(value);
                    map.insert(name.clone(), ty);
                }
                SimpleType::Table(TableType {
                    sealed: !map.is_empty(),
                    fields: map,
                })
            }
            ExprKind::Require { target } => self.require_type(target.as_ref(), expr.span),
        }
    }

    fn require_type(&mut self, target: Option<&ModuleId>, span: Span) -> SimpleType {
        self.consume(1);
        let Some(target) = target else {
            // Import target is not a string literal; nothing to resolve.
            return SimpleType::Dynamic;
        };
        if !self.known_modules.contains(target) {
            self.error(ErrorKind::UnknownRequire, span);
            return SimpleType::Dynamic;
        }
        let edge = (self.module.clone(), target.clone());
        if self.removed_edges.contains(&edge) {
            // This import closed a cycle and was dropped from the graph;
            // report once per removed edge.
            if self.reported_cycles.insert(target.clone()) {
                self.error(ErrorKind::ModuleHasCyclicDependency, span);
            }
            return SimpleType::Dynamic;
        }
        self.dep_exports
            .get(target)
            .cloned()
            .unwrap_or(SimpleType::Dynamic)
    }

    fn field_read(&mut self, base: SimpleType, field: &str, span: Span) -> SimpleType {
        if !self.consume(1) {
            return SimpleType::Dynamic;
        }
        match base {
            SimpleType::Dynamic => SimpleType::Dynamic,
            SimpleType::Top => {
                self.error(ErrorKind::TypeMismatch, span);
                SimpleType::Dynamic
            }
            SimpleType::Table(table) => match table.fields.get(field) {
                Some(ty) => ty.clone(),
                None => {
                    self.error(ErrorKind::UnknownProperty, span);
                    SimpleType::Dynamic
                }
            },
            SimpleType::Optional(inner) => {
                self.error(ErrorKind::OptionalValueAccess, span);
                self.field_read(*inner, field, span)
            }
            SimpleType::Number
            | SimpleType::Str
            | SimpleType::Boolean
            | SimpleType::Nil
            | SimpleType::Function { .. } => {
                self.error(ErrorKind::NotATable, span);
                SimpleType::Dynamic
            }
        }
    }

    fn field_write_check(&mut self, base: SimpleType, field: &str, span: Span) {
        if !self.consume(1) {
            return;
        }
        match base {
            SimpleType::Dynamic => {}
            SimpleType::Top => self.error(ErrorKind::TypeMismatch, span),
            SimpleType::Table(table) => {
                if table.sealed && !table.fields.contains_key(field) {
                    self.error(ErrorKind::CannotExtendTable, span);
                }
            }
            SimpleType::Optional(inner) => {
                self.error(ErrorKind::OptionalValueAccess, span);
                self.field_write_check(*inner, field, span);
            }
            _ => self.error(ErrorKind::NotATable, span),
        }
    }

    fn call_check(&mut self, callee: SimpleType, argc: usize, span: Span) -> SimpleType {
        if !self.consume(1) {
            return SimpleType::Dynamic;
        }
        match callee {
            SimpleType::Dynamic => SimpleType::Dynamic,
            SimpleType::Function { params } => {
                if params != argc {
                    self.error(ErrorKind::CountMismatch, span);
                }
                SimpleType::Dynamic
            }
            SimpleType::Top => {
                self.error(ErrorKind::TypeMismatch, span);
                SimpleType::Dynamic
            }
            SimpleType::Optional(inner) => {
                self.error(ErrorKind::OptionalValueAccess, span);
                self.call_check(*inner, argc, span)
            }
            _ => {
                self.error(ErrorKind::CannotCallNonFunction, span);
                SimpleType::Dynamic
            }
        }
    }

    /// Mirror a field write into the environment when the object is a plain
    /// `name.field.field` path. Non-path objects get surface checks only.
    fn update_lvalue(&mut self, object: &Expr, field: &str, t_val: SimpleType) {
        let Some((root, path)) = lvalue_path(object) else {
            return;
        };
        let conditional = self.cond_depth > 0;
        let Some(mut root_ty) = self.lookup(&root) else {
            return;
        };
        if set_in_path(&mut root_ty, &path, field, t_val, conditional) {
            self.rebind(&root, root_ty);
        }
    }
}

fn lvalue_path(expr: &Expr) -> Option<(String, Vec<String>)> {
    match &expr.kind {
        ExprKind::Name(name) => Some((name.clone(), Vec::new())),
        ExprKind::Field { base, name } => {
            let (root, mut path) = lvalue_path(base)?;
            path.push(name.clone());
            Some((root, path))
        }
        _ => None,
    }
}

fn set_in_path(
    ty: &mut SimpleType,
    path: &[String],
    field: &str,
    t_val: SimpleType,
    conditional: bool,
) -> bool {
    match path.first() {
        None => {
            let SimpleType::Table(table) = ty else {
                return false;
            };
            match table.fields.get(field) {
                Some(old) => {
                    let new_ty = if conditional {
                        merge(old.clone(), t_val)
                    } else {
                        t_val
                    };
                    table.fields.insert(field.to_string(), new_ty);
                    true
                }
                None if !table.sealed => {
                    let new_ty = if conditional {
                        optional_of(t_val)
                    } else {
                        t_val
                    };
                    table.fields.insert(field.to_string(), new_ty);
                    true
                }
                None => false,
            }
        }
        Some(step) => {
            let SimpleType::Table(table) = ty else {
                return false;
            };
            match table.fields.get_mut(step) {
                Some(inner) => set_in_path(inner, &path[1..], field, t_val, conditional),
                None => false,
            }
        }
    }
}

fn has_valued_return(body: &[Stmt]) -> bool {
    body.iter().any(|stmt| match &stmt.kind {
        StmtKind::Return { value } => value.is_some(),
        StmtKind::If { body, .. } => has_valued_return(body),
        _ => false,
    })
}

fn definitely_returns(body: &[Stmt]) -> bool {
    matches!(
        body.last().map(|s| &s.kind),
        Some(StmtKind::Return { value: Some(_) })
    )
}
