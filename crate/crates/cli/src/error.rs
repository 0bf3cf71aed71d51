use thiserror::Error;

/// Failures of the front-end. Configuration problems exit with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fracbubble_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if is_validation(e) => 2,
            _ => 1,
        }
    }
}

fn is_validation(e: &fracbubble_core::Error) -> bool {
    use fracbubble_core::Error::*;
    matches!(e, GammaOutOfRange(_) | ZeroDimension | DegenerateExponent { .. } | DimensionTooLarge(_) | InvalidArgument(_))
}
