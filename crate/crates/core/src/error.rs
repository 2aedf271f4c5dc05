use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("log-likelihood is not finite at data index {index}")]
    NonFiniteLikelihood { index: usize },
    #[error("gradient is not finite (coordinate {coordinate})")]
    NonFiniteGradient { coordinate: usize },
    #[error("model does not provide per-point gradients")]
    GradientUnavailable,
    #[error("parameter entry {index} is not finite")]
    NonFiniteParameter { index: usize },
    #[error("parameter dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset must contain at least one observation")]
    EmptyDataset,
    #[error("observation {index} is outside the model domain")]
    InvalidObservation { index: usize },
    #[error("batch size {m} is invalid for a dataset of {n} points")]
    InvalidBatchSize { m: usize, n: usize },
    #[error("batch lineage mismatch: {0}")]
    BatchLineage(&'static str),
    #[error("lambda ({lambda}) must be strictly below tau ({tau})")]
    LambdaNotBelowTau { lambda: f64, tau: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid log-density is not finite at grid index {index}")]
    NonFiniteGrid { index: usize },
}

impl Error {
    /// True for errors caused by an invalid configuration rather than by a
    /// failure while sampling.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidBatchSize { .. }
                | Error::LambdaNotBelowTau { .. }
                | Error::Config(_)
                | Error::DimensionMismatch { .. }
                | Error::GradientUnavailable
                | Error::EmptyDataset
                | Error::InvalidObservation { .. }
                | Error::NonFiniteParameter { .. }
        )
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
