use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::value::Domain;

/// Parses mini-language source into a [`Program`].
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        at: 0,
        next_site: 0,
    };
    let program = p.program()?;
    validate(&program)?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    next_site: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn site(&mut self) -> SiteId {
        let id = SiteId(self.next_site);
        self.next_site += 1;
        id
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let pos = self.pos();
        Err(ParseError::Syntax {
            line: pos.line,
            column: pos.column,
            message: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            self.error(format!("expected {}", what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, pos))
            }
            _ => self.error(format!("expected {}", what)),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Semi) {
            self.advance();
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Tok::Newline) {
            self.advance();
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut domains = Vec::new();
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::Eof => break,
                Tok::Domain => domains.push(self.domain_decl()?),
                Tok::Global => {
                    let pos = self.pos();
                    self.advance();
                    let (name, _) = self.ident("global variable name")?;
                    self.expect(Tok::Assign, "'=' in global declaration")?;
                    let site = self.site();
                    let init = self.expr()?;
                    self.terminator()?;
                    globals.push(GlobalDecl {
                        name,
                        init,
                        pos,
                        site,
                    });
                }
                Tok::Def => functions.push(self.function()?),
                _ => return self.error("expected 'def', 'global' or 'domain' at top level"),
            }
        }
        Ok(Program {
            domains,
            globals,
            functions,
            entry: "main".to_string(),
            site_count: self.next_site,
        })
    }

    fn domain_decl(&mut self) -> Result<DomainDecl, ParseError> {
        let pos = self.pos();
        self.advance();
        let (first, _) = self.ident("variable name")?;
        let (function, variable) = if *self.peek() == Tok::Dot {
            self.advance();
            let (var, _) = self.ident("variable name")?;
            (Some(first), var)
        } else {
            (None, first)
        };
        self.expect(Tok::Colon, "':' in domain declaration")?;
        let (kind, _) = self.ident("domain name")?;
        let domain = match kind.as_str() {
            "bool" => Domain::Bool,
            "int" => Domain::Int,
            "float" => Domain::Float,
            "string" => Domain::Str,
            "bounded" => {
                self.expect(Tok::Minus, "'bounded-int'")?;
                let (rest, _) = self.ident("'bounded-int'")?;
                if rest != "int" {
                    return self.error("expected 'bounded-int'");
                }
                self.expect(Tok::LParen, "'('")?;
                let lo = self.signed_int()?;
                self.expect(Tok::Comma, "','")?;
                let hi = self.signed_int()?;
                self.expect(Tok::RParen, "')'")?;
                if lo > hi {
                    return self.error("empty bounded-int range");
                }
                Domain::BoundedInt { lo, hi }
            }
            _ => return self.error(format!("unknown domain '{}'", kind)),
        };
        self.terminator()?;
        Ok(DomainDecl {
            function,
            variable,
            domain,
            pos,
        })
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.advance();
                Ok(if neg { -v } else { v })
            }
            _ => self.error("expected integer"),
        }
    }

    fn function(&mut self) -> Result<FunctionDef, ParseError> {
        let pos = self.pos();
        self.advance();
        let (name, _) = self.ident("function name")?;
        self.expect(Tok::LParen, "'('")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (pname, ppos) = self.ident("parameter name")?;
                let site = self.site();
                params.push(Param {
                    name: pname,
                    pos: ppos,
                    site,
                });
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        self.skip_newlines();
        let body = self.block()?;
        Ok(FunctionDef {
            name,
            params,
            body,
            pos,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut stmts = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    return Ok(stmts);
                }
                Tok::Eof => return self.error("expected '}'"),
                _ => stmts.push(self.statement()?),
            }
        }
    }

    /// Braced block or a single statement.
    fn body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.skip_newlines();
        if *self.peek() == Tok::LBrace {
            self.block()
        } else {
            Ok(alloc::vec![self.statement()?])
        }
    }

    fn terminator(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline | Tok::Semi => {
                self.advance();
                Ok(())
            }
            Tok::RBrace | Tok::Else | Tok::Eof => Ok(()),
            _ => self.error("expected end of statement"),
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        self.expect(Tok::LParen, "'('")?;
        // The predicate site precedes any site inside the condition. A bare
        // variable contains no sites, so its reservation can be returned.
        let reserved = self.site();
        let expr = self.expr()?;
        self.expect(Tok::RParen, "')'")?;
        let site = if matches!(expr.kind, ExprKind::Var(_)) {
            self.next_site -= 1;
            None
        } else {
            Some(reserved)
        };
        Ok(Cond { expr, site })
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::If => {
                self.advance();
                let cond = self.cond()?;
                let then_branch = self.body()?;
                let save = self.at;
                self.skip_separators_before_else();
                let else_branch = if *self.peek() == Tok::Else {
                    self.advance();
                    self.skip_newlines();
                    if *self.peek() == Tok::If {
                        Some(alloc::vec![self.statement()?])
                    } else {
                        Some(self.body()?)
                    }
                } else {
                    self.at = save;
                    None
                };
                return Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    pos,
                });
            }
            Tok::While => {
                self.advance();
                let cond = self.cond()?;
                let body = self.body()?;
                return Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    pos,
                });
            }
            Tok::Return => {
                self.advance();
                if matches!(self.peek(), Tok::Newline | Tok::Semi | Tok::RBrace | Tok::Eof) {
                    StmtKind::Return {
                        value: None,
                        site: None,
                    }
                } else {
                    let site = self.site();
                    let value = self.expr()?;
                    StmtKind::Return {
                        value: Some(value),
                        site: Some(site),
                    }
                }
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::Assign => {
                self.advance();
                self.advance();
                let site = self.site();
                let value = self.expr()?;
                StmtKind::Assign {
                    target: name,
                    value,
                    site,
                }
            }
            Tok::Ident(name) if name == "print" && *self.peek_at(1) == Tok::LParen => {
                self.advance();
                self.advance();
                let value = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                StmtKind::Print(value)
            }
            _ => StmtKind::Expr(self.expr()?),
        };
        self.terminator()?;
        Ok(Stmt { kind, pos })
    }

    fn skip_separators_before_else(&mut self) {
        let mut k = self.at;
        while matches!(self.tokens[k].tok, Tok::Newline | Tok::Semi) {
            k += 1;
        }
        if self.tokens[k].tok == Tok::Else {
            self.at = k;
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, ParseError> {
        const LEVELS: &[&[(Tok, BinOp)]] = &[
            &[(Tok::OrOr, BinOp::Or)],
            &[(Tok::AndAnd, BinOp::And)],
            &[(Tok::EqEq, BinOp::Eq), (Tok::NotEq, BinOp::Ne)],
            &[
                (Tok::Lt, BinOp::Lt),
                (Tok::Le, BinOp::Le),
                (Tok::Gt, BinOp::Gt),
                (Tok::Ge, BinOp::Ge),
            ],
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Rem),
            ],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (tok, op) in LEVELS[level] {
                if self.peek() == tok {
                    let pos = self.pos();
                    self.advance();
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr {
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                        pos,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.primary(),
        };
        self.advance();
        let inner = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(inner)),
            pos,
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.advance();
                ExprKind::Float(v)
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Tok::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                return Ok(e);
            }
            Tok::Ident(name) => {
                self.advance();
                if *self.peek() != Tok::LParen {
                    ExprKind::Var(name)
                } else if name == "getChar" {
                    self.advance();
                    let (target, _) = self.ident("variable argument to getChar")?;
                    let site = self.site();
                    self.expect(Tok::RParen, "')'")?;
                    ExprKind::GetChar { target, site }
                } else if name == "print" {
                    return self.error("print is a statement");
                } else {
                    self.advance();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "')'")?;
                    ExprKind::Call(name, args)
                }
            }
            _ => return self.error("expected expression"),
        };
        Ok(Expr { kind, pos })
    }
}

fn validate(program: &Program) -> Result<(), ParseError> {
    let mut names = BTreeSet::new();
    for f in &program.functions {
        if f.name == "print" || f.name == "getChar" || builtin_arity(&f.name).is_some() {
            return Err(ParseError::Semantic {
                line: f.pos.line,
                message: format!("function name '{}' shadows a builtin", f.name),
            });
        }
        if !names.insert(f.name.as_str()) {
            return Err(ParseError::DuplicateFunction {
                name: f.name.clone(),
                line: f.pos.line,
            });
        }
        let mut params = BTreeSet::new();
        for p in &f.params {
            if !params.insert(p.name.as_str()) {
                return Err(ParseError::Semantic {
                    line: p.pos.line,
                    message: format!("duplicate parameter '{}'", p.name),
                });
            }
        }
    }
    let mut globals = BTreeSet::new();
    for g in &program.globals {
        if !globals.insert(g.name.as_str()) {
            return Err(ParseError::Semantic {
                line: g.pos.line,
                message: format!("duplicate global '{}'", g.name),
            });
        }
    }
    match program.function(&program.entry) {
        None => return Err(ParseError::MissingEntry),
        Some(f) if !f.params.is_empty() => {
            return Err(ParseError::Semantic {
                line: f.pos.line,
                message: "entry function takes no parameters".into(),
            })
        }
        _ => {}
    }
    let mut result = Ok(());
    let mut check = |e: &Expr| {
        if result.is_err() {
            return;
        }
        if let ExprKind::Call(name, args) = &e.kind {
            let arity = program
                .function(name)
                .map(|f| f.params.len())
                .or_else(|| builtin_arity(name));
            match arity {
                None => {
                    result = Err(ParseError::Semantic {
                        line: e.pos.line,
                        message: format!("unknown function '{}'", name),
                    })
                }
                Some(n) if n != args.len() => {
                    result = Err(ParseError::Semantic {
                        line: e.pos.line,
                        message: format!("'{}' expects {} argument(s), got {}", name, n, args.len()),
                    })
                }
                _ => {}
            }
        }
    };
    for g in &program.globals {
        g.init.walk(&mut check);
    }
    for f in &program.functions {
        walk_stmts(&f.body, &mut |s| {
            for e in stmt_exprs(s) {
                e.walk(&mut check);
            }
        });
    }
    result
}

/// Visits statements in source order, descending into branches and loops.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                walk_stmts(then_branch, f);
                if let Some(e) = else_branch {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

/// Expressions evaluated directly by a statement (not by nested statements).
pub fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    match &s.kind {
        StmtKind::Assign { value, .. } => alloc::vec![value],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => alloc::vec![&cond.expr],
        StmtKind::Return { value, .. } => value.iter().collect(),
        StmtKind::Print(e) | StmtKind::Expr(e) => alloc::vec![e],
    }
}
