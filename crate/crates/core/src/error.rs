use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,

    #[error("alignment: {0}")]
    Alignment(String),

    #[error("no overlap between series")]
    NoOverlap,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("ordering error at row {row}: timestamps must be strictly increasing")]
    Ordering { row: usize },

    #[error("invalid price: {0}")]
    InvalidPrice(f64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("empty samples")]
    EmptySamples,

    #[error("uninformative forecast: every forecast value in the window is zero")]
    UninformativeForecast,

    #[error("degenerate costs: mean opportunity costs sum to zero")]
    DegenerateCosts,

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse category used by the command-line front end to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => ErrorKind::Io,
            Error::Solver(_) => ErrorKind::Solver,
            _ => ErrorKind::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Io,
    Solver,
}
