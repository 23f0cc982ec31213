use thiserror::Error;

/// Errors raised by the model, decoders and threshold calculators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Readings that cannot have come from truthful sensors.
    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("capacity exceeded: {what} is {actual}, limit is {limit}")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    /// Parameters outside the region where a threshold formula is defined.
    #[error("threshold formula undefined: {constraint}")]
    OutsideDomain { constraint: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(constraint: impl Into<String>) -> Error {
    Error::OutsideDomain {
        constraint: constraint.into(),
    }
}
