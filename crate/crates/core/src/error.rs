use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Traffic intensity at or above one: the confirmed-request queue grows without bound.
    #[error("unstable configuration: traffic intensity {rho} >= 1")]
    UnstableConfig { rho: f64 },

    #[error("steady-state solver did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Too much probability mass sits on the truncation edge for the result to be trusted.
    #[error("truncation too small: boundary mass {boundary_mass:e} exceeds {limit:e}")]
    UnderTruncated { boundary_mass: f64, limit: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("random walk exceeded the step horizon of {0}")]
    HorizonExceeded(u64),
}

impl Error {
    /// Stable machine-readable code, used by the CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::UnstableConfig { .. } => "UNSTABLE_CONFIG",
            Error::NonConvergence { .. } => "NON_CONVERGENCE",
            Error::UnderTruncated { .. } => "UNDER_TRUNCATED",
            Error::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            Error::HorizonExceeded(_) => "HORIZON_EXCEEDED",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
