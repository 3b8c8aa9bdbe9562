use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Gram matrix condition number {condition:.3e} exceeds cap {cap:.3e}")]
    SingularChannel { condition: f64, cap: f64 },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("ZF rejected {rejected} of {total} draws, above the 0.1% limit")]
    RejectionRate { rejected: usize, total: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("result table is empty")]
    EmptyTable,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Config { .. }
            | Error::UnknownPreset(_)
            | Error::Shape(_) => ErrorClass::Config,
            Error::SingularChannel { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::RejectionRate { .. }
            | Error::Numerical(_) => ErrorClass::Numerical,
            Error::EmptyTable | Error::Io { .. } | Error::Format { .. } => ErrorClass::Io,
        }
    }
}
