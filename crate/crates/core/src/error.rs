use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method stopped without meeting its tolerance.
    #[error("numeric failure: {what} (residual {residual:.3e})")]
    Numeric { what: String, residual: f64 },

    /// A factorisation met a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    Indefinite { row: usize, pivot: f64 },

    /// Requested problem size exceeds the configured guard.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The discretisation error swamps a finite-difference stencil.
    #[error("precision: {0}")]
    Precision(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            residual,
        }
    }

    /// True for errors caused by the numbers rather than by the caller or the
    /// environment.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric { .. } | Error::Indefinite { .. } | Error::Precision(_)
        )
    }
}

impl Clone for Error {
    fn clone(&self) -> Self {
        match self {
            Error::Domain(s) => Error::Domain(s.clone()),
            Error::Numeric { what, residual } => Error::numeric(what.clone(), *residual),
            Error::Indefinite { row, pivot } => Error::Indefinite { row: *row, pivot: *pivot },
            Error::Resource(s) => Error::Resource(s.clone()),
            Error::Precision(s) => Error::Precision(s.clone()),
            Error::Config(s) => Error::Config(s.clone()),
            Error::Io(e) => Error::Io(io::Error::new(e.kind(), e.to_string())),
        }
    }
}
