use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is too far from Hermitian (relative asymmetry {asymmetry:.3e})")]
    TooAsymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid taper count {k} for series length {n}")]
    BadCount { k: usize, n: usize },

    #[error("series length {got} does not match taper length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("frequency {freq} Hz is outside the Nyquist range +/-{nyquist} Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },

    #[error("degenerate trace input: {0}")]
    DegenerateTraces(&'static str),

    #[error("non-positive shrinkage denominator {0:.6e}")]
    NonPositiveDenominator(f64),

    #[error("insufficient tapers: K={k}, p={p} (need {need})")]
    InsufficientTapers { k: usize, p: usize, need: &'static str },

    #[error("precision matrix has a non-positive diagonal entry at index {0}")]
    NonPositiveDiagonal(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("baseline squared error is zero")]
    ZeroBaseline,

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
