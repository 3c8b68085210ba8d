use thiserror::Error;

pub type Result<T> = std::result::Result<T, TvaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TvaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("fitted AR coefficient {0} is outside the stationary region (|phi| < 1)")]
    NonStationary(f64),

    #[error("unsupported ARIMA order ({p},{d},{q})")]
    UnsupportedOrder { p: usize, d: usize, q: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl TvaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        TvaError::InvalidInput(msg.into())
    }

    /// True for failures originating from the filesystem rather than from data.
    pub fn is_io(&self) -> bool {
        matches!(self, TvaError::Io(_))
    }
}

impl From<std::io::Error> for TvaError {
    fn from(e: std::io::Error) -> Self {
        TvaError::Io(e.to_string())
    }
}
