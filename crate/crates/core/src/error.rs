use thiserror::Error;

/// Errors raised by the local, oracle, geodesic and assembly layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomatchError {
    /// An answer depends on digits at or above `precision - guard`.
    #[error("precision exhausted: p={p}, precision={precision}, guard={guard}")]
    PrecisionExhausted { p: u64, precision: u32, guard: u32 },

    #[error("trace {0} is not hyperbolic (|t| must exceed 2)")]
    NonHyperbolicTrace(i64),

    #[error("regularity violated: {0}")]
    RegularityViolated(String),

    #[error("enumeration too large: {size} elements exceeds limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("level {0} too large for finite-group enumeration (max 6)")]
    LevelTooLarge(u64),

    #[error("discriminant {0} is a perfect square")]
    SquareDiscriminant(i128),

    #[error("no optimal embedding found: {0}")]
    NoOptimalEmbedding(String),

    #[error("invalid ramification data: {0}")]
    InvalidRamification(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomatchError>;
