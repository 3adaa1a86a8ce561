use thiserror::Error;

/// Errors raised by tensor construction, the decision engine and the classifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: order {left_order}/dim {left_dim} vs order {right_order}/dim {right_dim}")]
    ShapeMismatch {
        left_order: usize,
        left_dim: usize,
        right_order: usize,
        right_dim: usize,
    },

    #[error("expected {expected} entries for the given order and dimension, found {found}")]
    EntryCount { expected: usize, found: usize },

    #[error("non-finite value at index {index:?}")]
    NonFinite { index: Vec<usize> },

    #[error("duplicate entry at index {0:?}")]
    DuplicateIndex(Vec<usize>),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),

    #[error("scaling vector must be strictly positive")]
    NonPositiveScaling,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("not a Z-tensor: positive off-diagonal entry at {0:?}")]
    NotZTensor(Vec<usize>),

    #[error("symmetric tensor required")]
    NotSymmetric,

    #[error("nonnegative tensor required: negative entry at {0:?}")]
    NegativeEntry(Vec<usize>),

    #[error("dimension {dim} exceeds the subset enumeration cap {cap}")]
    SubsetCapExceeded { dim: usize, cap: usize },

    #[error("almost classes are undefined for dimension {0}; need at least 2")]
    DimensionTooSmall(usize),

    #[error("order {0} not supported here; need at least 2")]
    OrderTooSmall(usize),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("rejection budget of {0} attempts exhausted")]
    RejectionBudget(usize),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
