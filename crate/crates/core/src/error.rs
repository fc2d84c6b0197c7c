use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::cantstop::GameError;
use crate::grammar::{GrammarError, ProgramError};

/// Top-level error for library entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Game(#[from] GameError),
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Malformed dataset, trace, or program file content.
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn is_contract_violation(&self) -> bool {
        matches!(self, Error::Contract(_))
    }
}
