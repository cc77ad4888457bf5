use thiserror::Error;

/// Errors raised by the reduction pipeline, the radial solvers and the file
/// interfaces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("argument {argument} beyond the trusted domain (cutoff {cutoff})")]
    DomainCutoff { argument: f64, cutoff: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("densities live on incompatible grids")]
    IncompatibleGrid,

    #[error("profile has no zero before r = {max_radius} (w = {last_value})")]
    UnboundedProfile { max_radius: f64, last_value: f64 },

    #[error("step size underflow at r = {radius}")]
    Stiffness { radius: f64 },

    #[error("no bracket found: {0}")]
    BracketFailure(String),

    #[error("Lagrange multiplier search failed: {0}")]
    Multiplier(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        energies: Vec<f64>,
    },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by the numerics rather than by the caller's
    /// input or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DomainCutoff { .. }
                | Error::InternalConsistency(_)
                | Error::UnboundedProfile { .. }
                | Error::Stiffness { .. }
                | Error::BracketFailure(_)
                | Error::Multiplier(_)
                | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
