use thiserror::Error;

/// Errors raised by the selection algorithms and their supporting kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowRankError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("zero range: matrix has no nonzero column above the rank tolerance")]
    ZeroRange,

    #[error("dense SVD failed to converge")]
    SvdNoConvergence,

    #[error("bidiagonal SVD did not converge within {sweeps} sweeps")]
    BidiagonalNoConvergence { sweeps: usize },

    #[error("vector is not of unit norm (norm = {norm})")]
    NotUnitVector { norm: f64 },

    #[error("negative eigenvalue {value} beyond tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("requested rank {k} exceeds the numerical rank {rank}")]
    RankExceeded { k: usize, rank: usize },

    #[error("pivot ({i}, {j}) too small: |B(i,j)| = {value}")]
    PivotTooSmall { i: usize, j: usize, value: f64 },

    #[error("residual numerically zero at step {step}: no admissible pivot remains")]
    ResidualZero { step: usize },

    #[error("selected submatrix is numerically singular")]
    SingularSubmatrix,

    #[error("enumeration of {tuples} tuples exceeds the cap of {cap}")]
    EnumerationCap { tuples: f64, cap: usize },

    #[error("conditioning prefix has probability zero")]
    ZeroProbability,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LowRankError {
    fn from(e: std::io::Error) -> Self {
        LowRankError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LowRankError>;
