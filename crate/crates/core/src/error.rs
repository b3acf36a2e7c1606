use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension C({n}+{l}-1, {n}) overflows usize")]
    DimensionOverflow { n: usize, l: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state {0} is not a member of the basis")]
    StateNotInBasis(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "matrix dimension {dim} exceeds the dense cap {cap}; iterative eigensolvers are not supported"
    )]
    DimensionOverCap { dim: usize, cap: usize },

    #[error("materializing a {dim}x{dim} density matrix exceeds the memory cap (composite dim {cap})")]
    MemoryCap { dim: usize, cap: usize },

    #[error("eigensolver failed to converge at index {0}")]
    NoConvergence(usize),

    #[error("negative eigenvalue {0:e} beyond clipping tolerance")]
    NegativeEigenvalue(f64),

    #[error("unfolding polynomial is not monotone over the data range (degree {degree})")]
    NonMonotoneUnfolding { degree: usize },

    #[error("only {populated} populated bins, at least {required} needed for an envelope fit")]
    InsufficientBins { populated: usize, required: usize },

    #[error("no decay detected: regular bath")]
    RegularBath,

    #[error("no exponential regime: {0}")]
    NoExponentialRegime(String),

    #[error("positivity violated: eigenvalue {0:e}")]
    PositivityViolated(f64),

    #[error("step size did not converge: halving dt still changes the result by {0:e}")]
    StepSizeNotConverged(f64),
}
