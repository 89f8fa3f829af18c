use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("field check failed: {0}")]
    FieldCheck(String),

    #[error("unsupported transform: {0}")]
    UnsupportedTransform(String),

    #[error("non-finite position at step {step}; coefficients blew up or dt is too large")]
    NonFinitePosition { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("all Monte Carlo weights underflowed")]
    Underflow,

    #[error("solver instability at t = {time}: value {value} exceeds bound {bound}")]
    SolverInstability { time: f64, value: f64, bound: f64 },

    #[error("too many clipped nodes: {clipped} of {total}")]
    ExcessiveClipping { clipped: usize, total: usize },

    #[error("picard iteration did not converge within {iterations} iterations (last sup-difference {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("branching event bound violated: dt * rate = {0} > 0.1")]
    EventBound(f64),

    #[error("particle count {count} exceeds cap {cap}")]
    ParticleOverflow { count: usize, cap: usize },

    #[error("growth fit needs at least 4 points in the window, found {0}")]
    TooFewPoints(usize),

    #[error("non-positive value {value} at t = {time} in growth series")]
    NonPositiveValue { time: f64, value: f64 },

    #[error("malformed grid dump: {0}")]
    MalformedDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
