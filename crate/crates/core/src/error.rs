use thiserror::Error;

/// Errors raised anywhere in the analytics pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: non-positive price {price} for {code} on {date}")]
    NonPositivePrice {
        line: u64,
        code: String,
        date: String,
        price: f64,
    },

    #[error("line {line}: duplicate observation for {code} on {date}")]
    DuplicateObservation {
        line: u64,
        code: String,
        date: String,
    },

    #[error("duplicate holding {0}")]
    DuplicateHolding(String),

    #[error("holdings list is empty")]
    EmptyHoldings,

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("invalid series {code}: {message}")]
    InvalidSeries { code: String, message: String },

    #[error("date alignment failed: {message}")]
    Alignment { message: String },

    #[error("instrument {0} not found in price data")]
    MissingInstrument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("insufficient data: need at least {needed} observations, have {actual}")]
    InsufficientData { needed: usize, actual: usize },

    #[error("rank-deficient design matrix{}", describe_columns(.dependent_columns))]
    RankDeficient { dependent_columns: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("margin of {0:.6} per unit capital required but margin borrowing is disabled")]
    MarginNotSupported(f64),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_columns(cols: &[usize]) -> String {
    if cols.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
        format!(" (dependent regressor columns: {})", list.join(", "))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unreadable or malformed input.
    Input,
    /// Input parsed but violates a precondition of the requested analysis.
    Precondition,
    /// The numeric core could not produce a trustworthy answer.
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 3,
            ErrorClass::Precondition => 4,
            ErrorClass::Numeric => 5,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::NonPositivePrice { .. }
            | Error::DuplicateObservation { .. }
            | Error::DuplicateHolding(_)
            | Error::EmptyHoldings
            | Error::InvalidInstrument(_)
            | Error::InvalidSeries { .. }
            | Error::Io { .. }
            | Error::Json(_) => ErrorClass::Input,
            Error::Alignment { .. }
            | Error::MissingInstrument(_)
            | Error::DimensionMismatch { .. }
            | Error::InsufficientData { .. }
            | Error::InvalidParameter(_)
            | Error::MarginNotSupported(_) => ErrorClass::Precondition,
            Error::RankDeficient { .. } | Error::Numeric(_) => ErrorClass::Numeric,
        }
    }
}
