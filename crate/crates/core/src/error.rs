use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite
    /// predictor, setting outside the factor box, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are individually valid but inconsistent with each other.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("information matrix is singular")]
    Singular,

    #[error("infeasible design space: {0}")]
    Infeasible(String),

    #[error("constraint repair failed after {passes} passes")]
    RepairFailed { passes: usize },

    #[error("configuration error: {0}")]
    Config(String),
}
