use std::path::PathBuf;

use thiserror::Error;

use crate::engine::Exception;
use crate::syntax::SyntaxError;
use crate::term::TermError;

/// Errors surfaced to embedding code and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("uncaught exception: {0}")]
    Uncaught(Exception),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("usage: {0}")]
    Usage(String),
}

impl From<Exception> for Error {
    fn from(e: Exception) -> Error {
        Error::Uncaught(e)
    }
}

impl std::error::Error for Exception {}
