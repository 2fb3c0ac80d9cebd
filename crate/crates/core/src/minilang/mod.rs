//! The mini-language: lexer, parser, node indexing and pretty-printing.
//!
//! Programs are sequences of `def` functions (entry point `main`), optional
//! `global` declarations and optional `domain` headers. Statements are
//! assignments, `if`/`else`, `while`, `return`, `print(e)` and expression
//! statements; `read()` consumes the next input token and `getChar(v)` reads
//! one token into `v`, evaluating to whether one was available.

mod ast;
mod lexer;
mod nodes;
mod parser;
mod pretty;

use alloc::string::String;

pub use ast::*;
pub use nodes::{index_nodes, node_contexts, Location, Node, NodeContext, NodeIdx, NodeKind, GLOBAL_SCOPE};
pub use parser::{parse, stmt_exprs, walk_stmts};
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("line {line}: {message}")]
    Semantic { line: u32, message: String },
    #[error("duplicate function '{name}' at line {line}")]
    DuplicateFunction { name: String, line: u32 },
    #[error("no entry function 'main'")]
    MissingEntry,
}

impl ParseError {
    pub fn line(&self) -> Option<u32> {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::Semantic { line, .. }
            | ParseError::DuplicateFunction { line, .. } => Some(*line),
            ParseError::MissingEntry => None,
        }
    }
}
