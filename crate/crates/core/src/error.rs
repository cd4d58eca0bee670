use thiserror::Error;

use crate::access_structure::Subset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid access structure: {0}")]
    InvalidStructure(String),

    #[error("qualified set {qualified} is contained in forbidden set {forbidden}")]
    Overlap { qualified: Subset, forbidden: Subset },

    #[error("receiver {receiver}: row {row} of the transition matrix sums to {sum}")]
    NotStochastic { receiver: usize, row: usize, sum: f64 },

    #[error("negative probability {value} in {context}")]
    NegativeProbability { value: f64, context: String },

    #[error("distribution sums to {0}, expected 1")]
    NotNormalized(f64),

    #[error("product alphabet has {states} states, cap is {cap}")]
    AlphabetOverflow { states: u128, cap: u128 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("receiver {} is not a degraded version of receiver {index}: max residual {residual:.3e}", index - 1)]
    NotDegraded { index: usize, residual: f64 },

    #[error("ordering violated at index {index}: min eigenvalue {min_eigenvalue:.3e}")]
    OrderingViolation { index: usize, min_eigenvalue: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("channel matrix is singular or ill-conditioned (condition number {0:.3e})")]
    Singular(f64),

    #[error("power allocation {total} exceeds budget {budget}")]
    OverBudget { total: f64, budget: f64 },

    #[error("layer {layer}: {what} = {value} is not a positive integer")]
    NonIntegralRate { layer: usize, what: String, value: f64 },

    #[error("joint distribution does not factor as a Markov chain (residual {0:.3e})")]
    NotMarkov(f64),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("enumeration of {size} entries exceeds the cap of {cap}")]
    EnumerationOverflow { size: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
