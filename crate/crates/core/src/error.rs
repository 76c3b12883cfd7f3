use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("no attempts")]
    NoAttempts,

    #[error("insufficient attempts: need {needed} present events, have {have}")]
    InsufficientAttempts { needed: usize, have: usize },

    #[error("entry ({row}, {col}) cannot be predicted: {reason}")]
    Unpredictable { row: usize, col: usize, reason: String },

    #[error("degenerate circuit (|det A0 - det A1| = {denominator:e})")]
    DegenerateCircuit { denominator: f64 },

    #[error("empty subsample")]
    EmptySubsample,

    #[error("no fair race exists: {0}")]
    NoFairRace(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
