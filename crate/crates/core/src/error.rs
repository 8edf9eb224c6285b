use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value breaks one of the documented invariants.
    #[error("{ty} invariant violated: {invariant}")]
    Invariant {
        ty: &'static str,
        invariant: String,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no-fault scenario has no fault template; use prefault_sample")]
    NoFaultTemplate,

    #[error("sample at t = {t} precedes fault onset at {t_fault}")]
    BeforeOnset { t: f64, t_fault: f64 },

    #[error("timestamp {t} is not after the previous sample at {prev}")]
    OutOfOrder { t: f64, prev: f64 },

    #[error("cannot classify an empty set of faulted phases")]
    EmptyPhaseSet,

    #[error("unknown fault class `{0}`")]
    UnknownFault(String),
}

impl Error {
    pub(crate) fn invariant(ty: &'static str, invariant: impl Into<String>) -> Self {
        Error::Invariant {
            ty,
            invariant: invariant.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
