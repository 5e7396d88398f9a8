use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the transform, quantizer, pipeline and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transform size {0} must be a power of two between 2 and 2^20")]
    InvalidSize(usize),

    #[error("index {index} out of range for transform size {n_size}")]
    IndexOutOfRange { index: usize, n_size: usize },

    #[error("non-finite sample at position {0}")]
    NonFinite(usize),

    #[error("radix {0} is not supported (expected 2 or 4)")]
    UnsupportedRadix(usize),

    #[error("radix {radix} does not divide transform size {n_size}")]
    RadixDoesNotDivide { radix: usize, n_size: usize },

    #[error("pipeline for N = {n_size} needs {expected} stages, got {actual}")]
    StageCountMismatch {
        n_size: usize,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("pipeline direction mismatch: expected {expected}")]
    DirectionMismatch { expected: &'static str },

    #[error("invalid quantizer parameter: {0}")]
    InvalidQuantizer(String),

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("reference signal has zero energy")]
    ZeroEnergyReference,

    #[error("sample set is empty")]
    EmptySamples,

    #[error("invalid sweep parameter: {0}")]
    InvalidSweep(String),
}
