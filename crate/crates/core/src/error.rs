use thiserror::Error;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A scalar argument lies outside the domain of the operation.
    #[error("{name} = {value} is out of domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A hardware profile field violates its invariant.
    #[error("invalid profile field `{field}`: {reason}")]
    InvalidProfile { field: &'static str, reason: String },

    /// An exhaustive routine was asked to handle an instance beyond its bound.
    #[error("instance too large: {0}")]
    TooLarge(String),

    /// Conditioning on link success when success is impossible.
    #[error("success probability {0:e} is zero; conditional state undefined")]
    UndefinedConditional(f64),

    #[error("usage: {0}")]
    Usage(String),

    #[error("no block size in the range yields a defined objective")]
    NoFeasibleBlockSize,

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
}

impl ModelError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Domain { .. } => "domain",
            ModelError::InvalidProfile { .. } => "invalid-profile",
            ModelError::TooLarge(_) => "too-large",
            ModelError::UndefinedConditional(_) => "undefined-conditional",
            ModelError::Usage(_) => "usage",
            ModelError::NoFeasibleBlockSize => "no-feasible-k",
            ModelError::DegenerateSeries(_) => "degenerate-series",
        }
    }
}

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::Domain {
        name,
        value,
        reason,
    }
}
