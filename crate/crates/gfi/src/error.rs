use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit-code contract: config errors exit 2,
/// data/contract errors exit 3, numeric failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A computation produced or detected non-finite / degenerate values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Invalid run configuration (unknown keys, missing paths, bad values).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input data (CSV cells, group spec, schema mismatches).
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Process exit code for the CLI front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) => 4,
            _ => 3,
        }
    }
}
