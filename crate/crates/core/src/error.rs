use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("word length {0} is outside the supported range 2..=32")]
    WordLength(usize),

    #[error("word {bits:#x} does not fit in {n} bits")]
    WordOutOfRange { bits: u64, n: usize },

    #[error("word length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid bitstring {0:?}")]
    Bitstring(String),

    #[error("a word never conflicts with itself; conflict predicate requires distinct words")]
    SameWord,

    #[error("{what} limit exceeded: n = {n}, limit = {limit}")]
    LimitExceeded { what: &'static str, n: usize, limit: usize },

    #[error("invalid search configuration: {0}")]
    Config(String),

    #[error("invalid code set: {0}")]
    InvalidCode(String),

    #[error("damping parameter {0} outside the allowed range")]
    Gamma(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace is {0}, expected 1")]
    Trace(f64),

    #[error("matrix size {0} x {1} overflows the allocation guard")]
    SizeOverflow(usize, usize),

    #[error("recovery construction broke an internal invariant: {0}")]
    Recovery(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
