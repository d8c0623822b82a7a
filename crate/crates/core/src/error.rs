use thiserror::Error;

/// Which block of a partitioned matrix failed to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Regression,
    Schur,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Block::Regression => f.write_str("regression block"),
            Block::Schur => f.write_str("Schur complement"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: time must be positive and finite")]
    NonPositiveTime { row: usize },
    #[error("row {row}: status must be 0 or 1")]
    InvalidStatus { row: usize },
    #[error("row {row}, column `{col}`: cannot parse cell")]
    UnparseableCell { row: usize, col: String },
    #[error("reference level `{reference}` not found in column `{column}`")]
    UnknownReference { column: String, reference: String },
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("invalid covariate spec `{0}`")]
    InvalidCovariateSpec(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("target function is not finite at knot {knot}")]
    NonFiniteTarget { knot: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("log-likelihood is not finite at the supplied parameters")]
    NonFiniteLikelihood,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all {0} optimizer restarts failed")]
    AllRestartsFailed(usize),
    #[error("observed information is not finite or not invertible")]
    NonFiniteHessian,
    #[error("singular {0}")]
    SingularBlock(Block),
    #[error("confidence intervals unavailable: Hessian not finite")]
    IntervalsUnavailable,
    #[error("no finite initial point after {0} attempts")]
    NonFiniteInitialPoint(usize),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least 2 chains of equal length")]
    InsufficientChains,
    #[error("covariate mismatch: fit has {expected} columns, newdata has {got}")]
    CovariateMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyData,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference value is zero")]
    ZeroReference,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by fitting.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::NonPositiveTime { .. }
                | Error::InvalidStatus { .. }
                | Error::UnparseableCell { .. }
                | Error::UnknownReference { .. }
                | Error::ZeroVariance(_)
                | Error::UnknownFixture(_)
                | Error::InvalidCovariateSpec(_)
                | Error::DegenerateData(_)
                | Error::CovariateMismatch { .. }
                | Error::EmptyData
                | Error::LengthMismatch(..)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
