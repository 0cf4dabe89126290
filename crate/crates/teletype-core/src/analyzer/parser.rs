//! Lexer and recovering recursive-descent parser.
//!
//! Parsing never fails as a whole. Each unrecoverable point produces one
//! syntax-error value with its line span, after which the parser skips to
//! the next source line and tries again.

use crate::analyzer::ast::{Chunk, Expr, ExprKind, Span, Stmt, StmtKind};
use crate::kind::{AnalysisError, ErrorKind, ModuleId};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number,
    Str(String),
    Local,
    If,
    Then,
    End,
    Function,
    Return,
    True,
    False,
    Nil,
    Assign,
    Plus,
    Dot,
    Comma,
    Semi,
    LParen,
    RParen,
    LBrace,
    RBrace,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "local" => Tok::Local,
        "if" => Tok::If,
        "then" => Tok::Then,
        "end" => Tok::End,
        "function" => Tok::Function,
        "return" => Tok::Return,
        "true" => Tok::True,
        "false" => Tok::False,
        "nil" => Tok::Nil,
        _ => return None,
    })
}

fn lex(lines: &[String]) -> (Vec<Token>, Vec<u32>) {
    let mut tokens = Vec::new();
    let mut bad_lines = Vec::new();
    for (idx, text) in lines.iter().enumerate() {
        let line = idx as u32 + 1;
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if c == '-' && bytes.get(i + 1) == Some(&b'-') {
                break; // comment to end of line
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                tokens.push(Token {
                    tok: keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string())),
                    line,
                });
                continue;
            }
            if c.is_ascii_digit() {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.')
                {
                    i += 1;
                }
                tokens.push(Token {
                    tok: Tok::Number,
                    line,
                });
                continue;
            }
            if c == '"' {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += 1;
                }
                if j >= bytes.len() {
                    bad_lines.push(line); // unterminated string literal
                    break;
                }
                tokens.push(Token {
                    tok: Tok::Str(text[start..j].to_string()),
                    line,
                });
                i = j + 1;
                continue;
            }
            let tok = match c {
                '=' => Some(Tok::Assign),
                '+' => Some(Tok::Plus),
                '.' => Some(Tok::Dot),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::Semi),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                _ => None,
            };
            match tok {
                Some(tok) => {
                    tokens.push(Token { tok, line });
                    i += 1;
                }
                None => {
                    bad_lines.push(line);
                    break; // skip the rest of the line
                }
            }
        }
    }
    (tokens, bad_lines)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    error_lines: Vec<u32>,
    last_line: u32,
}

struct Abort;

type PResult<T> = Result<T, Abort>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_line(&self) -> u32 {
        self.tokens
            .get(self.pos)
            .map(|t| t.line)
            .unwrap_or(self.last_line)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn fail<T>(&mut self) -> PResult<T> {
        self.error_lines.push(self.peek_line());
        Err(Abort)
    }

    fn expect(&mut self, tok: Tok) -> PResult<u32> {
        if self.peek() == Some(&tok) {
            let line = self.peek_line();
            self.pos += 1;
            Ok(line)
        } else {
            self.fail()
        }
    }

    /// Skip everything on the current line after a parse failure.
    fn recover(&mut self) {
        let bad_line = match self.tokens.get(self.pos) {
            Some(t) => t.line,
            None => return,
        };
        while self
            .tokens
            .get(self.pos)
            .is_some_and(|t| t.line == bad_line)
        {
            self.pos += 1;
        }
    }

    fn starts_expr(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Ident(_)
                | Tok::Number
                | Tok::Str(_)
                | Tok::True
                | Tok::False
                | Tok::Nil
                | Tok::LBrace
                | Tok::LParen
        )
    }

    fn parse_block(&mut self, until_end: bool) -> Vec<Stmt> {
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                None => break,
                Some(Tok::End) if until_end => break,
                Some(Tok::End) => {
                    // stray `end` with no opener
                    self.error_lines.push(self.peek_line());
                    self.pos += 1;
                }
                Some(Tok::Semi) => {
                    self.pos += 1;
                }
                Some(_) => {
                    let before = self.pos;
                    match self.parse_stmt() {
                        Ok(stmt) => stmts.push(stmt),
                        Err(Abort) => {
                            if self.pos == before {
                                self.recover();
                            }
                            if self.pos == before {
                                self.pos += 1; // guarantee progress
                            }
                        }
                    }
                }
            }
        }
        stmts
    }

    fn parse_stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek_line();
        match self.peek() {
            Some(Tok::Local) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                let value = if self.eat(&Tok::Assign) {
                    Some(self.parse_expr()?)
                } else {
                    None
                };
                let end = value.as_ref().map(|v| v.span.end_line).unwrap_or(start);
                Ok(Stmt {
                    kind: StmtKind::Local { name, value },
                    span: Span::new(start, end),
                })
            }
            Some(Tok::If) => {
                self.pos += 1;
                let cond = self.parse_expr()?;
                self.expect(Tok::Then)?;
                let body = self.parse_block(true);
                let end = self.expect(Tok::End)?;
                Ok(Stmt {
                    kind: StmtKind::If { cond, body },
                    span: Span::new(start, end),
                })
            }
            Some(Tok::Function) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                self.expect(Tok::LParen)?;
                let mut params = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        params.push(self.expect_ident()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                let body = self.parse_block(true);
                let end = self.expect(Tok::End)?;
                Ok(Stmt {
                    kind: StmtKind::Function { name, params, body },
                    span: Span::new(start, end),
                })
            }
            Some(Tok::Return) => {
                self.pos += 1;
                let value = match self.peek() {
                    Some(tok) if Self::starts_expr(tok) => Some(self.parse_expr()?),
                    _ => None,
                };
                let end = value.as_ref().map(|v| v.span.end_line).unwrap_or(start);
                Ok(Stmt {
                    kind: StmtKind::Return { value },
                    span: Span::new(start, end),
                })
            }
            Some(_) => {
                let expr = self.parse_expr()?;
                if self.eat(&Tok::Assign) {
                    let value = self.parse_expr()?;
                    let span = expr.span.join(value.span);
                    match expr.kind {
                        ExprKind::Name(name) => Ok(Stmt {
                            kind: StmtKind::AssignName { name, value },
                            span,
                        }),
                        ExprKind::Field { base, name } => Ok(Stmt {
                            kind: StmtKind::AssignField {
                                object: *base,
                                field: name,
                                value,
                            },
                            span,
                        }),
                        _ => self.fail(),
                    }
                } else if matches!(expr.kind, ExprKind::Call { .. } | ExprKind::Require { .. }) {
                    let span = expr.span;
                    Ok(Stmt {
                        kind: StmtKind::ExprStmt { expr },
                        span,
                    })
                } else {
                    self.fail()
                }
            }
            None => self.fail(),
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.fail(),
        }
    }

    fn parse_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_postfix()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.parse_postfix()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr {
                kind: ExprKind::Add {
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.parse_primary()?;
        loop {
            if self.eat(&Tok::Dot) {
                let name = self.expect_ident()?;
                let span = Span::new(expr.span.start_line, self.last_seen_line());
                expr = Expr {
                    kind: ExprKind::Field {
                        base: Box::new(expr),
                        name,
                    },
                    span,
                };
            } else if self.peek() == Some(&Tok::LParen) {
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        args.push(self.parse_expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RParen)?;
                let span = Span::new(expr.span.start_line, end);
                expr = match &expr.kind {
                    ExprKind::Name(n) if n == "require" => {
                        let target = match args.as_slice() {
                            [Expr {
                                kind: ExprKind::Str(s),
                                ..
                            }] => Some(ModuleId::new(s.clone())),
                            _ => None,
                        };
                        Expr {
                            kind: ExprKind::Require { target },
                            span,
                        }
                    }
                    _ => Expr {
                        kind: ExprKind::Call {
                            callee: Box::new(expr),
                            args,
                        },
                        span,
                    },
                };
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn last_seen_line(&self) -> u32 {
        if self.pos == 0 {
            return 1;
        }
        self.tokens
            .get(self.pos - 1)
            .map(|t| t.line)
            .unwrap_or(self.last_line)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let line = self.peek_line();
        let token = match self.peek() {
            Some(t) => t.clone(),
            None => return self.fail(),
        };
        match token {
            Tok::Number => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Number,
                    span: Span::line(line),
                })
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Str(s),
                    span: Span::line(line),
                })
            }
            Tok::True | Tok::False => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Bool(token == Tok::True),
                    span: Span::line(line),
                })
            }
            Tok::Nil => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Nil,
                    span: Span::line(line),
                })
            }
            Tok::Ident(name) => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Name(name),
                    span: Span::line(line),
                })
            }
            Tok::LBrace => {
                self.pos += 1;
                let mut fields = Vec::new();
                if self.peek() != Some(&Tok::RBrace) {
                    loop {
                        let name = self.expect_ident()?;
                        self.expect(Tok::Assign)?;
                        let value = self.parse_expr()?;
                        fields.push((name, value));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                        if self.peek() == Some(&Tok::RBrace) {
                            break; // trailing comma
                        }
                    }
                }
                let end = self.expect(Tok::RBrace)?;
                Ok(Expr {
                    kind: ExprKind::Table { fields },
                    span: Span::new(line, end),
                })
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                let end = self.expect(Tok::RParen)?;
                Ok(Expr {
                    kind: inner.kind,
                    span: Span::new(line, end),
                })
            }
            _ => self.fail(),
        }
    }
}

/// Parse a module body into a chunk plus zero or more syntax errors.
pub fn parse_module(module: &ModuleId, lines: &[String]) -> (Chunk, Vec<AnalysisError>) {
    let (tokens, bad_lines) = lex(lines);
    let last_line = lines.len().max(1) as u32;
    let mut parser = Parser {
        tokens,
        pos: 0,
        error_lines: bad_lines,
        last_line,
    };
    let stmts = parser.parse_block(false);
    let mut lines_with_errors = parser.error_lines;
    lines_with_errors.sort_unstable();
    lines_with_errors.dedup();
    let errors = lines_with_errors
        .into_iter()
        .map(|line| AnalysisError::new(ErrorKind::SyntaxError, module.clone(), line, line))
        .collect();
    (Chunk { stmts }, errors)
}
