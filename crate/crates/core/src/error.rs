use thiserror::Error;

/// Errors raised by constructors and checks across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be between 2 and 255, got {0}")]
    AlphabetSize(usize),
    #[error("symbol {symbol} outside alphabet 1..={d}")]
    SymbolRange { symbol: usize, d: usize },
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("not a probability vector (sum {sum}, min {min})")]
    NotProbability { sum: f64, min: f64 },
    #[error("matrix is not column stochastic (column {column} sums to {sum})")]
    NotStochastic { column: usize, sum: f64 },
    #[error("matrix is reducible")]
    Reducible,
    #[error("function takes a negative value {0}")]
    Negative(f64),
    #[error("function is not strictly positive (value {0})")]
    NotPositive(f64),
    #[error("power iteration did not converge after {0} steps")]
    NonConvergence(usize),
    #[error("Jacobian not normalized on fiber (mass {0})")]
    JacobianNotNormalized(f64),
    #[error("points are not related")]
    Unrelated,
    #[error("level {level} is too shallow, need at least {need}")]
    Level { level: usize, need: usize },
    #[error("function depends on the first coordinate")]
    DependsOnFirstCoordinate,
    #[error("contraction factor must exceed 1, got {0}")]
    Contraction(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
