use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is valid in principle but the exact computation would be too large.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A correlator or profile evaluated exactly on its singular point.
    #[error("singular point: {0}")]
    Singularity(String),

    #[error("phase mismatch: expected {expected}, found {found}")]
    PhaseMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("flow did not reach strong coupling before l = {l_max}")]
    NoStrongCoupling { l_max: f64 },

    #[error("missing input: {0}")]
    MissingInput(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
