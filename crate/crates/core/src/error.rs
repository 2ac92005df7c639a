use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at particle {particle}")]
    NonFinite { particle: usize },

    #[error("divergence guard tripped at step {step}: |X_{particle}| = {norm:e} exceeds {bound:e}")]
    Diverged {
        step: usize,
        particle: usize,
        norm: f64,
        bound: f64,
    },

    #[error("Brownian path layout does not match noise mode: {0}")]
    LayoutMismatch(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error(
        "exact transport limited to {limit} points per side (got {n} x {m}); pass an entropic epsilon to approximate"
    )]
    TooLargeForExact { n: usize, m: usize, limit: usize },

    #[error("network simplex did not terminate within {0} pivots")]
    SimplexStalled(usize),

    #[error(
        "Picard iteration did not converge on subinterval {subinterval}: last gap {last_gap:e} after {iterations} iterations (contraction factor {gamma:.4})"
    )]
    PicardNotConverged {
        subinterval: usize,
        iterations: usize,
        last_gap: f64,
        gamma: f64,
    },

    #[error("excluded parameter combination: {0}")]
    ExcludedParameters(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
