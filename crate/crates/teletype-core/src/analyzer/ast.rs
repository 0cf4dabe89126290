//! Syntax tree for the analyzed language subset.

use crate::kind::ModuleId;

/// 1-based inclusive line span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start_line: u32,
    pub end_line: u32,
}

impl Span {
    pub fn new(start_line: u32, end_line: u32) -> Span {
        Span {
            start_line: start_line.min(end_line),
            end_line: end_line.max(start_line),
        }
    }

    pub fn line(line: u32) -> Span {
        Span::new(line, line)
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(
            self.start_line.min(other.start_line),
            self.end_line.max(other.end_line),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number,
    Str(String),
    Bool(bool),
    Nil,
    Name(String),
    Field {
        base: Box<Expr>,
        name: String,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Add {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Table {
        fields: Vec<(String, Expr)>,
    },
    /// `require("<module>")`; `None` when the argument was not a string
    /// literal and the target cannot be resolved statically.
    Require {
        target: Option<ModuleId>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Local {
        name: String,
        value: Option<Expr>,
    },
    AssignName {
        name: String,
        value: Expr,
    },
    AssignField {
        object: Expr,
        field: String,
        value: Expr,
    },
    If {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Function {
        name: String,
        params: Vec<String>,
        body: Vec<Stmt>,
    },
    Return {
        value: Option<Expr>,
    },
    ExprStmt {
        expr: Expr,
    },
}

/// Parsed module body. Parsing is total: unparseable regions become
/// syntax-error values and the chunk keeps whatever did parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chunk {
    pub stmts: Vec<Stmt>,
}

/// Collect every statically-resolvable `require` target, in source order.
pub fn collect_requires(chunk: &Chunk) -> Vec<ModuleId> {
    fn walk_expr(expr: &Expr, out: &mut Vec<ModuleId>) {
        match &expr.kind {
            ExprKind::Require {
                target: Some(target),
            } => out.push(target.clone()),
            ExprKind::Require { target: None } => {}
            ExprKind::Field { base, .. } => walk_expr(base, out),
            ExprKind::Call { callee, args } => {
                walk_expr(callee, out);
                args.iter().for_each(|a| walk_expr(a, out));
            }
            ExprKind::Add { lhs, rhs } => {
                walk_expr(lhs, out);
                walk_expr(rhs, out);
            }
            ExprKind::Table { fields } => fields.iter().for_each(|(_, e)| walk_expr(e, out)),
            _ => {}
        }
    }
    fn walk_stmt(stmt: &Stmt, out: &mut Vec<ModuleId>) {
        match &stmt.kind {
            StmtKind::Local { value, .. } => {
                if let Some(v) = value {
                    walk_expr(v, out);
                }
            }
            StmtKind::AssignName { value, .. } => walk_expr(value, out),
            StmtKind::AssignField { object, value, .. } => {
                walk_expr(object, out);
                walk_expr(value, out);
            }
            StmtKind::If { cond, body } => {
                walk_expr(cond, out);
                body.iter().for_each(|s| walk_stmt(s, out));
            }
            StmtKind::Function { body, .. } => body.iter().for_each(|s| walk_stmt(s, out)),
            StmtKind::Return { value } => {
                if let Some(v) = value {
                    walk_expr(v, out);
                }
            }
            StmtKind::ExprStmt { expr } => walk_expr(expr, out),
        }
    }
    let mut out = Vec::new();
    chunk.stmts.iter().for_each(|s| walk_stmt(s, &mut out));
    out
}
