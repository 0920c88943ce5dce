use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("map produced a non-finite output at component {index}")]
    NonFiniteOutput { index: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquareMatrix { rows: usize, cols: usize },

    #[error("ragged matrix: row {row} has {found} entries, expected {expected}")]
    RaggedMatrix { row: usize, expected: usize, found: usize },

    #[error("negative entry {value} at ({row}, {col}) in a matrix required to be nonnegative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("power iteration did not converge in {iterations} iterations (bracket [{lower}, {upper}])")]
    NoConvergence { iterations: usize, lower: f64, upper: f64 },

    #[error("exact spectral radius supports n <= {max}, got n = {n}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("row-independence closure has {size} members, cap is {cap}")]
    ClosureTooLarge { size: u128, cap: usize },

    #[error("product enumeration needs {count} products, cap is {cap}")]
    EnumerationCapExceeded { count: u128, cap: usize },

    #[error("negative delay {value} at ({row}, {col})")]
    NegativeDelay { row: usize, col: usize, value: i64 },

    #[error("delay {value} at ({row}, {col}) exceeds the bound {bound}")]
    DelayExceedsBound { row: usize, col: usize, value: i64, bound: i64 },

    #[error("switch schedule selected map {index} at step {step}, but only {len} maps exist")]
    ScheduleError { step: usize, index: usize, len: usize },

    #[error("matrix set is empty")]
    EmptySet,

    #[error("sampling grid has {points} points, cap is {cap}")]
    SamplingTooLarge { points: u128, cap: usize },

    #[error("fixed-point iteration stopped after {iterations} iterations with residual {residual}")]
    FixedPointNotFound { iterations: usize, residual: f64 },

    #[error("member {member} violates its Lipschitz matrix by {margin}")]
    LipschitzViolation { member: usize, margin: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep { step, source: Box::new(self) }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// The innermost error, with any step annotations removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}
