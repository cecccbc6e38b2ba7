use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("internal numerical failure: {0}")]
    Internal(String),

    #[error("optimal point at or beyond the horizon (t* = {t_star}, S = {horizon}); boundary maxima are not supported")]
    BoundaryCase { t_star: f64, horizon: f64 },

    #[error("degenerate configuration: {0}")]
    Degeneracy(String),

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Dimension(_) => "dimension",
            Error::Internal(_) => "internal",
            Error::BoundaryCase { .. } => "boundary_case",
            Error::Degeneracy(_) => "degeneracy",
            Error::Dependency(_) => "dependency",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
