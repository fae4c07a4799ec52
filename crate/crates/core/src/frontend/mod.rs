//! Concrete syntax for programs, types and policy files.

use thiserror::Error;

mod lexer;
pub mod parser;
pub mod policy_file;

pub use parser::{parse_program, parse_term, parse_type, Program, SpanTree};
pub use policy_file::{parse_policy, LoadError, PolicySource};

/// A region of source text; `line` and `column` are 1-based and refer to
/// `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }
}
