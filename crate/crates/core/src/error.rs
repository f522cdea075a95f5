use thiserror::Error;

/// Errors produced anywhere in the elicitation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    /// A remote provider could not be reached or answered garbage. `item`
    /// names the catalog item being scored, when known, so the caller can retry.
    #[error("transport error{}: {message}", item.as_ref().map(|i| format!(" (item {i})")).unwrap_or_default())]
    Transport {
        item: Option<String>,
        message: String,
    },

    #[error("elicitation failed: {0}")]
    Elicitation(String),

    /// The description has no aspect left that was not already asked about.
    #[error("no unused aspects left in item description")]
    ExhaustedAspects,

    /// Every item in the catalog is out of unused aspects.
    #[error("every item in the catalog is out of unused aspects")]
    AllAspectsExhausted,

    #[error("baseline failed: {0}")]
    Baseline(String),

    #[error("operation not allowed in phase {phase}")]
    State { phase: &'static str },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
