use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad argument or configuration value.
    Validation,
    /// File access, schema or serialization trouble.
    Io,
    /// A numerical routine could not produce a result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: expected column `{expected}` at position {position}, found `{found}`")]
    Schema {
        position: usize,
        expected: String,
        found: String,
    },

    #[error(
        "parse error at row {row}, column {column} (`{name}`): cannot read `{value}` as a number"
    )]
    Parse {
        row: usize,
        column: usize,
        name: String,
        value: String,
    },

    #[error("column `{0}` is constant; cannot normalize")]
    DegenerateColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "matrix is singular (pivot {pivot:e} at step {step}, pivot ratio estimate {condition:e})"
    )]
    Singular {
        step: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("least-squares system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("every candidate produced a non-finite cost")]
    AllCandidatesNonFinite,

    #[error("all firing strengths underflowed to zero")]
    DegenerateStrengths,

    #[error("training diverged at epoch {epoch} (cost {cost:e})")]
    Diverged { epoch: usize, cost: f64 },

    #[error("training failed: {0}")]
    Training(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Schema { .. }
            | Error::Parse { .. }
            | Error::UnknownColumn(_)
            | Error::DimensionMismatch { .. } => ErrorKind::Io,
            Error::InvalidArgument(_) => ErrorKind::Validation,
            Error::DegenerateColumn(_)
            | Error::Singular { .. }
            | Error::RankDeficient(_)
            | Error::NonFinite(_)
            | Error::AllCandidatesNonFinite
            | Error::DegenerateStrengths
            | Error::Diverged { .. }
            | Error::Training(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
