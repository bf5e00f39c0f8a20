use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A computation would exceed a configured resource cap (e.g. partition
    /// enumeration beyond the Bell-number budget).
    #[error("{what} requires n = {requested}, above the configured cap of {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Redundant inputs disagree with each other (e.g. sufficient statistics
    /// that do not match the data they claim to summarize).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A sampler or estimator was configured in a way that cannot produce a
    /// valid result.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Incrementally maintained floating-point state drifted from a from-scratch
    /// recomputation by more than the allowed tolerance. This is a hard failure:
    /// results produced after silent drift are not trustworthy.
    #[error("numerical drift: {quantity} differs from recomputation by {drift:e} (tolerance {tolerance:e})")]
    NumericalDrift {
        quantity: &'static str,
        drift: f64,
        tolerance: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
