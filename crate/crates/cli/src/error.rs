use spotkit::error::{ObjectiveError, SpotError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("objective error: {0}")]
    Objective(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Objective(_) => 3,
        }
    }
}

impl From<SpotError> for CliError {
    fn from(e: SpotError) -> Self {
        let msg = e.to_string();
        match e {
            SpotError::Config(_)
            | SpotError::Space(_)
            | SpotError::Argument(_)
            | SpotError::SchemaVersion { .. }
            | SpotError::State(_)
            | SpotError::Json(_) => CliError::Config(msg),
            SpotError::Objective(
                ObjectiveError::Unknown(_) | ObjectiveError::FormulaUnavailable(_) | ObjectiveError::Dimension { .. },
            ) => CliError::Config(msg),
            SpotError::Objective(_) => CliError::Objective(msg),
            SpotError::Surrogate(_) | SpotError::Io(_) => CliError::Other(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
