use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GameError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid payoff matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("index {index} out of range for ground set of size {size}")]
    Index { index: usize, size: usize },

    #[error("empty population")]
    EmptyPopulation,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("failed to reach tolerance {target:e}; achieved {achieved:e}")]
    Convergence { target: f64, achieved: f64 },

    #[error("restart objectives disagree by {spread:e} (allowed {allowed:e}); objective is not concave here")]
    NonConcave { spread: f64, allowed: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GameError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GameError::Io {
            path: path.into(),
            source,
        }
    }
}
