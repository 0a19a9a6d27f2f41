use std::path::{Path, PathBuf};

use pvt_core::ErrorKind;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] pvt_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 0 success, 1 usage or validation, 2 I/O or schema, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}
