use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("block index ({row}, {col}) out of range for {n_blocks} blocks")]
    BlockIndex { row: usize, col: usize, n_blocks: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("interval [{lo}, {hi}] is not valid for N = {last}")]
    InvalidInterval { lo: usize, hi: usize, last: usize },

    #[error("interval [{lo}, {hi}] is not anchored at 0 or N = {last}")]
    UnsupportedInterval { lo: usize, hi: usize, last: usize },

    #[error("tolerances must be positive")]
    InvalidTolerance,

    #[error("boundary condition {bc} is not defined for {side} conditioning in the {direction} model")]
    InvalidBoundary {
        direction: &'static str,
        side: &'static str,
        bc: &'static str,
    },

    #[error("model is malformed: {0}")]
    InvalidModel(String),

    #[error("oracle refuses stacked dimension {size} (cap {cap})")]
    OracleTooLarge { size: usize, cap: usize },

    #[error("at least 2 samples are required, got {0}")]
    InsufficientSamples(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
