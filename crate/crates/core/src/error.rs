use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs that are individually valid but inconsistent with each other
    /// (schedule vs. group count, matrix dimensions, empty budget).
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// NaN costs, underflow, non-finite parameters.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}
