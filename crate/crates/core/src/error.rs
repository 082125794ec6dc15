use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("elevation {value} m outside range [{lo}, {hi}] m")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "solver failed after {iterations} iterations: {message} (residual history: {history:?})"
    )]
    Solver {
        message: String,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("damping calibration failed: targets {targets:?}, achieved {achieved:?}")]
    Calibration {
        targets: Vec<f64>,
        achieved: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from user input rather than a failed solve.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::InvalidGeometry(_)
                | Error::OutOfRange { .. }
                | Error::DivisionByZero(_)
                | Error::Domain(_)
        )
    }
}
