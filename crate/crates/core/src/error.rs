use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by model construction, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A field violates its domain invariant. `field` is a dotted path such
    /// as `satellites[2].transmit_power_w`.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// Inputs disagree on the number of satellites or subcarriers.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument falls outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Assignment matrix violates the binary or one-to-one constraints.
    #[error("invalid assignment: {0}")]
    Assignment(String),

    /// Problem instance is too large for exhaustive enumeration.
    #[error("instance too large for brute force: {0}")]
    SizeGuard(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
