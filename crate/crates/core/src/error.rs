use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its domain. Raised before any simulation.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{module}: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    #[error("{module}: {routine} did not converge after {iterations} iterations")]
    NonConvergence {
        module: &'static str,
        routine: &'static str,
        iterations: usize,
    },

    #[error("vol: covariance is not positive definite (pivot {pivot}, value {value:e}); grid too fine for double precision")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("quad: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }

    /// True for configuration errors, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. })
    }

    /// Name of the module the error originated from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "config",
            Error::Domain { module, .. } | Error::NonConvergence { module, .. } => module,
            Error::NotPositiveDefinite { .. } => "vol",
            Error::Quadrature(_) => "quad",
        }
    }
}

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn require_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite, got {value}"),
        ))
    }
}
