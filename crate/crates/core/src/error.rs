use alloc::string::String;

/// Errors produced by the core numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "operator of {rows}x{cols} complex entries exceeds the memory budget of {budget} bytes; \
         use a matrix-free operator or a smaller scene"
    )]
    OperatorTooLarge { rows: usize, cols: usize, budget: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("signal-to-noise ratio is undefined for an all-zero echo")]
    UndefinedSnr,

    #[error("factorization failed: matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("solve cache is stale: built for {cached} active pixels, active set has {active}")]
    StaleCache { cached: usize, active: usize },

    #[error("protocol error in round {round}: {reason}")]
    Protocol { round: u64, reason: String },

    #[error("malformed message: {0}")]
    Decode(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
