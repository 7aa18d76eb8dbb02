use thiserror::Error;

/// Errors raised anywhere in the analysis chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid scale grid: {0}")]
    InvalidGrid(String),

    #[error("scale grid has {0} levels, at least 3 are required for ridge detection")]
    GridTooSmall(usize),

    #[error("transform cube is missing the {0} derivative")]
    MissingDerivative(&'static str),

    #[error("stability level {0} is not below one; the signal is not a modulated oscillation")]
    NotModulated(f64),

    #[error("no valid samples in the requested interval")]
    EmptyInterval,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) | Error::InvalidGrid(_) | Error::NotModulated(_) => 4,
            Error::UnsupportedOrder(_) | Error::GridTooSmall(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
