use thiserror::Error;

/// Errors produced anywhere in the extraction / pruning / evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or shape-inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// Invalid configuration parameter.
    #[error("config error: {0}")]
    Config(String),

    /// Gradient descent produced a non-finite loss.
    #[error("training diverged: {0} (try a lower learning rate)")]
    Divergence(String),

    /// An internal invariant did not hold. Always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("model file error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the caller's inputs rather than by a bug.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
