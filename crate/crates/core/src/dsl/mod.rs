//! MissionScript front end: tokens, syntax tree and literal rewriting.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod rewrite;
pub mod span;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{BinaryOp, Expr, Program, Stmt, UnaryOp};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use rewrite::{apply_rewrites, render_number, LiteralRewrite};
pub use span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("lex error at {span}: {message}")]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("parse error at {span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

/// Either kind of front-end failure; only the first one is ever reported.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> SourceSpan {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewriteError {
    #[error("span {span} does not address a number literal")]
    NotALiteral { span: SourceSpan },
    #[error("rewrite spans {first} and {second} overlap")]
    Overlap { first: SourceSpan, second: SourceSpan },
    #[error("rewrite at {span} has a non-finite value")]
    NonFinite { span: SourceSpan },
    #[error("source does not parse: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("rewritten program no longer has the same literals")]
    ShapeChanged,
}
