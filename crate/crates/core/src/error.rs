use std::path::PathBuf;

use thiserror::Error;

use crate::state::StateId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("R = {r} bohr lies outside the tabulated domain [{min}, {max}]")]
    Domain { r: f64, min: f64, max: f64 },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("eigensolver failed for a {size}x{size} matrix (LAPACK info = {info})")]
    Eigensolver { size: usize, info: i32 },

    #[error("levels were computed on different grids")]
    GridMismatch,

    #[error("no admissible chain: {reason}")]
    Infeasible {
        reason: String,
        weakest: Option<(StateId, StateId, f64)>,
    },

    #[error("time grid too coarse: {0}")]
    Resolution(String),

    #[error("norm drifted to {norm} at t = {time} a.u.")]
    NormDrift { time: f64, norm: f64 },

    #[error("non-finite amplitude encountered at t = {time} a.u.")]
    NonFinite { time: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Parse { .. }
                | Error::Invalid(_)
                | Error::GridMismatch
                | Error::Io { .. }
                | Error::Format { .. }
                | Error::Resolution(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
