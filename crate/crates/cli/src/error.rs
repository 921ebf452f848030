use std::io;
use std::path::Path;

use texkd::contourlet::ContourletError;
use texkd::loss::LossError;
use texkd::statexture::StatError;
use texkd::tensor::TensorError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("input not found: {0}")]
    NotFound(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Self::NotFound(path.display().to_string())
        } else {
            Self::Io { path: path.display().to_string(), source }
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => EXIT_USAGE,
            Self::NotFound(_) | Self::Io { .. } => EXIT_IO,
            Self::Data(_) => EXIT_MISMATCH,
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }

    /// Prefixes the message of a data error with the stage it came from.
    pub fn context(self, what: &str) -> Self {
        match self {
            Self::Data(m) => Self::Data(format!("{what}: {m}")),
            other => other,
        }
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::Io(source) => Self::Io { path: String::from("<tensor>"), source },
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<ContourletError> for CliError {
    fn from(e: ContourletError) -> Self {
        match e {
            ContourletError::InvalidFactor(_) | ContourletError::InvalidDepth(_) => Self::Config(e.to_string()),
            ContourletError::Tensor(t) => t.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<StatError> for CliError {
    fn from(e: StatError) -> Self {
        match e {
            StatError::InvalidConfig(m) => Self::Config(m),
            StatError::Tensor(t) => t.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::InvalidWeight { .. } => Self::Config(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}
