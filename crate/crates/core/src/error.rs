use std::io;

use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are split into input problems (`Validation`, `DimensionMismatch`,
/// `Precondition`, `ArchitectureTooSmall`) and runtime failures (`Io`,
/// `Csv`, `Json`, `Optimization`, `Experiment`). [`Error::is_validation`]
/// drives the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("architecture too small: {0}")]
    ArchitectureTooSmall(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("experiment cell (n = {n}, replication = {replication}) failed: {source}")]
    Experiment {
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::Precondition(_)
            | Error::ArchitectureTooSmall(_) => true,
            Error::Experiment { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
