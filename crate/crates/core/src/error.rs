use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("instance outside the declared space: {0}")]
    OutOfSpace(String),

    #[error("empirical distribution must contain at least one point")]
    EmptyDistribution,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("brute-force oracle scope: {0}")]
    OracleScope(String),

    #[error("invalid loss specification: {0}")]
    InvalidLoss(String),

    #[error("invalid adaptation: {0}")]
    InvalidAdaptation(String),

    #[error("pool holds {available} points but {requested} were requested")]
    PoolTooSmall { available: usize, requested: usize },

    #[error("need at least {needed} usable step ratios, found {found}")]
    NoUsableRatios { needed: usize, found: usize },

    #[error("invalid bound input: {0}")]
    InvalidBoundInput(String),

    #[error("missing {symbol} ({condition})")]
    MissingSymbol {
        symbol: &'static str,
        condition: &'static str,
    },

    #[error("{condition} violated: {detail}")]
    ConditionViolated {
        condition: &'static str,
        detail: String,
    },

    #[error("budget exhausted at T=0: epsilon {epsilon} does not exceed the initial gap {initial_gap}")]
    BudgetExhausted { epsilon: f64, initial_gap: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
