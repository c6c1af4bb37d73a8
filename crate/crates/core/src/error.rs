use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input could not be read or violates a documented precondition.
    Input,
    /// The input parsed but the data is numerically degenerate.
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("plot `{id}` has {count} point(s), at least 2 are required")]
    TooFewPoints { id: String, count: usize },
    #[error("plot `{id}` contains a non-finite coordinate")]
    NonFiniteValue { id: String },
    #[error("plot `{id}` has duplicate x = {x}")]
    DuplicateX { id: String, x: f64 },
    #[error("plot `{id}` has zero x-range and cannot be normalized")]
    ZeroXRange { id: String },
    #[error("metric value {0} is negative")]
    NegativeMetric(f64),
    #[error("regressor has zero variance")]
    DegenerateX,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("R² = {0} is outside [0, 1)")]
    InvalidR2(f64),
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no metric value for plot `{0}`")]
    MissingMetric(String),
    #[error("no score for plot `{0}`")]
    MissingScore(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("pool of {pool} plots is too small to select {k}")]
    PoolTooSmall { pool: usize, k: usize },
    #[error("only {have} distinct candidates, {need} required")]
    InsufficientCandidates { have: usize, need: usize },
    #[error("invalid study design: {0}")]
    InvalidDesign(String),
    #[error("rotation needs at least 4 groups, got {0}")]
    TooFewGroups(usize),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ZeroXRange { .. }
            | Error::DegenerateX
            | Error::InvalidR2(_)
            | Error::ZeroVariance
            | Error::InsufficientData { .. }
            | Error::InsufficientCandidates { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    /// Stable snake_case tag for machine-readable error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedInput(_) => "malformed_input",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::NonFiniteValue { .. } => "non_finite_value",
            Error::DuplicateX { .. } => "duplicate_x",
            Error::ZeroXRange { .. } => "zero_x_range",
            Error::NegativeMetric(_) => "negative_metric",
            Error::DegenerateX => "degenerate_x",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidR2(_) => "invalid_r2",
            Error::ZeroVariance => "zero_variance",
            Error::EmptyInput(_) => "empty_input",
            Error::MissingMetric(_) => "missing_metric",
            Error::MissingScore(_) => "missing_score",
            Error::InvalidRecord(_) => "invalid_record",
            Error::PoolTooSmall { .. } => "pool_too_small",
            Error::InsufficientCandidates { .. } => "insufficient_candidates",
            Error::InvalidDesign(_) => "invalid_design",
            Error::TooFewGroups(_) => "too_few_groups",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::MalformedInput(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::MalformedInput(err.to_string())
    }
}
