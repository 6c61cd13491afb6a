use thiserror::Error;

/// Errors raised by the algebra, realization and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,

    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("matrix is singular (determinant is identically zero)")]
    SingularMatrix,

    #[error("I - R is singular: no stability matrix exists for this realization")]
    NoStabilityMatrix,

    #[error("I - Delta*S is singular: the perturbed loop has no stability matrix")]
    SingularPerturbedLoop,

    #[error("the two closed forms of the perturbed stability matrix disagree")]
    FormMismatch,

    #[error("{0} is not stable")]
    NotStable(String),

    #[error("{0} is improper")]
    ImproperBlock(String),

    #[error("{0} is not strictly proper")]
    NotStrictlyProper(String),

    #[error("gain {0} is not stabilizing")]
    NotStabilizing(String),

    #[error("internal identity check failed: {0}")]
    IdentityCheckFailed(String),

    #[error("pole on the evaluation grid at omega = {omega}")]
    PoleOnGrid { omega: f64 },

    #[error("uncertainty block mask is empty")]
    EmptyMask,

    #[error("margin is infinite; no finite destabilizing perturbation exists")]
    InfiniteMargin,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
