use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resonant frequencies on simplex {simplex:?}: |combination| = {value:e} below tolerance {tolerance:e}")]
    Resonance {
        simplex: Vec<usize>,
        value: f64,
        tolerance: f64,
    },

    #[error("could not draw non-resonant frequencies after {0} attempts")]
    ResonanceRetriesExhausted(usize),

    #[error("non-positive action {value} at node {node}")]
    Domain { node: usize, value: f64 },

    #[error("state diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
