//! Reader and writer for the clause syntax.

pub mod lexer;
pub mod ops;
pub mod parser;
pub mod writer;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("syntax error at line {line}, column {col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}
