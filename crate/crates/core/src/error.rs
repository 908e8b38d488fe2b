use thiserror::Error;

/// Errors produced by the library.
///
/// Parameter indices carried by variants are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("power vector of length {found} in {location}, expected {expected}")]
    PowerLength {
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("parameter index {index} out of range for {count} parameters")]
    ParamIndex { index: usize, count: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("matrix has full rank: no null direction exists")]
    DeficiencyZero,

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("vector is not in the kernel: residual {residual:e} exceeds {bound:e}")]
    NotInKernel { residual: f64, bound: f64 },

    #[error("no nonsingular {rank}x{rank} minor found above tolerance")]
    MinorSelection { rank: usize },

    #[error("cofactor construction limited to n <= {limit}, got n = {n}")]
    CofactorLimit { n: usize, limit: usize },

    #[error("deflation stalled after {extracted} of {expected} frame vectors")]
    DeflationStalled { extracted: usize, expected: usize },

    #[error("deficiency changed from {expected} to {found} at path point {index}")]
    DeficiencyChanged {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("system is inconsistent: rank[D|b] = {augmented_rank} > rank D = {rank}")]
    InconsistentSystem { rank: usize, augmented_rank: usize },

    #[error("augmented matrix is singular; minor selection failed")]
    SingularAugmented,

    #[error("system has no right-hand side")]
    MissingRhs,

    #[error(
        "deficiency {0} > 1: sensitivity underdetermined, the null space admits a rotating family of unit solutions"
    )]
    DeficiencyTooHigh(usize),

    #[error("matrix is nonsingular at the query point: no unit null solution to differentiate")]
    NotDeficient,

    #[error(
        "derivative system is inconsistent (residual {residual:e} > {bound:e}); anchor or rank misdiagnosed"
    )]
    InconsistentDerivativeSystem { residual: f64, bound: f64 },

    #[error("null direction nearly orthogonal to anchor (|<x,u>| = {dot:.3e}) at stencil offset {offset:e}")]
    AlignmentAmbiguous { dot: f64, offset: f64 },

    #[error("generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("unknown corpus entry `{0}`")]
    UnknownCorpus(String),

    #[error("objective index {index} out of range for dimension {n}")]
    ObjectiveIndex { index: usize, n: usize },
}

impl Error {
    /// True for errors that describe the mathematics of the input rather than
    /// malformed input.
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            Error::Syntax { .. }
                | Error::DimensionMismatch(_)
                | Error::PowerLength { .. }
                | Error::ParamIndex { .. }
                | Error::InvalidTolerance(_)
                | Error::UnknownCorpus(_)
                | Error::ObjectiveIndex { .. }
                | Error::MissingRhs
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
