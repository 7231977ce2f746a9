use thiserror::Error;

use cobasis::experiments::ExperimentError;
use cobasis::{CsvdError, LinalgError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    /// Stable identifier printed with every diagnostic.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io(_) => "E_IO",
            CliError::Parse(_) => "E_PARSE",
            CliError::Input(_) => "E_INPUT",
            CliError::Config(_) => "E_CONFIG",
            CliError::Numeric(_) => "E_NUMERIC",
            CliError::Image(_) => "E_IMAGE",
            CliError::Replay(_) => "E_REPLAY",
        }
    }
}

impl From<CsvdError> for CliError {
    fn from(e: CsvdError) -> Self {
        match e {
            CsvdError::InvalidConfig(msg) => CliError::Config(msg),
            CsvdError::InvalidSet(msg) | CsvdError::DimensionMismatch(msg) => CliError::Input(msg),
            CsvdError::Linalg(LinalgError::DimensionMismatch(msg)) => CliError::Input(msg),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Csvd(inner) => inner.into(),
            ExperimentError::InvalidConfig(msg) => CliError::Config(msg),
            ExperimentError::Image(msg) => CliError::Image(msg),
            ExperimentError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
