use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("map is not invertible: {0}")]
    NotInvertible(String),

    #[error("query point lies in the polytope")]
    Member,

    #[error("{0} is not a generator of the polytope")]
    NotAGenerator(String),

    #[error("query point has a negative coordinate")]
    NegativeCoordinate,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degree {0} is not minimal: {1}")]
    NotMinimal(String, String),

    #[error("{0} is not an extreme point")]
    NotExtreme(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
