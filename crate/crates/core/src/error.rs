use alloc::string::String;

use crate::gaussian::ValidationReport;

/// Errors returned by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(ValidationReport),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("environment needs at least one signal")]
    EmptyEnvironment,

    #[error("non-redundancy violated: {0}")]
    NonRedundancyViolated(&'static str),

    #[error("signal index {index} out of range for {k} signals")]
    SignalIndexOutOfRange { index: usize, k: usize },

    #[error("count for signal {index} must be strictly positive (got {value})")]
    NonPositiveCount { index: usize, value: f64 },

    #[error("instance too large for exact search: {needed} candidates exceed budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("bound stated for w = 1 (max deviation {max_deviation})")]
    WeightsNotUnit { max_deviation: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid weight matrix: {0}")]
    InvalidWeightMatrix(&'static str),

    #[error("formula stated for N >= 1 (t >= 4), got t = {0}")]
    FormulaDomain(u32),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("capacity distribution does not first-order stochastically dominate the baseline")]
    NotStochasticallyDominant,

    #[error("K=2 normalization |ad| >= |bc| violated; swap the two signal rows")]
    K2Normalization,

    #[error("price denominator 1 - r + r*Sigma = {0} is not positive")]
    InadmissiblePrice(f64),

    #[error("invalid allocation path: {0}")]
    InvalidPath(String),

    #[error("path horizon {available} shorter than required {required}")]
    HorizonTooShort { available: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
