use thiserror::Error;

/// Unified error type for the whole laboratory.
///
/// The CLI maps variants onto exit codes: configuration problems exit 2,
/// tail-mass breaches exit 3, everything else numerical exits 4.
#[derive(Debug, Error)]
pub enum DilabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    #[error("region radius {radius} exceeds grid extent {extent}")]
    RegionTooLarge { radius: f64, extent: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense eigendecomposition refused: {nodes} nodes exceeds budget {budget}")]
    TooLarge { nodes: usize, budget: usize },

    #[error("functional calculus domain error: {0}")]
    Domain(String),

    #[error("tail mass {measured:.3e} exceeds threshold {threshold:.3e} ({context})")]
    TailMass {
        measured: f64,
        threshold: f64,
        context: String,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DilabError>;
