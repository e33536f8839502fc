use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("not a square in Q_{p}")]
    NotASquare { p: u64 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("form is anisotropic")]
    NotIsotropic,
    #[error("form is not in standard shape")]
    NotStandardForm,
    #[error("no isometry: quadratic values differ")]
    NoIsometry,
    #[error("target value q(v) differs from q(e1)")]
    ValueMismatch,
    #[error("target vector is not in the orbit of e1 (gradient not a unit)")]
    NotInOrbit,
    #[error("lattice is not unimodular")]
    NotUnimodular,
    #[error("generators are not saturated in the lattice")]
    NotSaturated,
    #[error("enumeration budget exceeded; best certified lower bound {lower_bound}")]
    BudgetExceeded { lower_bound: f64 },
    #[error("negative square: beta_inf^2 = {0} < 0")]
    NegativeSquare(f64),
    #[error("degenerate form or matrix")]
    Degenerate,
    #[error("form is definite")]
    Definite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
