use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("no users")]
    NoUsers,

    #[error("invalid correlation {0} (must satisfy |chi| <= 1)")]
    InvalidCorrelation(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("bisection failed to bracket a root in {0}")]
    NotBracketed(&'static str),

    #[error("epsilon infeasible: minimal achievable constraint value is {min_achievable:.6e}")]
    EpsilonInfeasible { min_achievable: f64 },

    #[error("degenerate beamformer: F W is zero")]
    DegenerateBeamformer,

    #[error("waveform has no energy toward target")]
    ZeroProbingEnergy,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("constellation is not normalized (average power {0})")]
    NotNormalized(f64),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
