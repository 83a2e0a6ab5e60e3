use thiserror::Error;

/// Errors raised by the estimators, loaders and the report pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid data for {ticker} at {date}: {message}")]
    Data {
        ticker: String,
        date: String,
        message: String,
    },

    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("unknown ticker: {0}")]
    UnknownTicker(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn insufficient(what: impl Into<String>, needed: usize, got: usize) -> Self {
        Error::InsufficientData {
            what: what.into(),
            needed,
            got,
        }
    }

    /// True for errors caused by user-supplied configuration or arguments.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownTicker(_))
    }
}
