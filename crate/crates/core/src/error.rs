use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (expected 2 or 4)")]
    UnsupportedDimension(usize),

    #[error("matrix is not unitary: max |U^dag U - I| = {defect:.3e} exceeds {tolerance:.1e}")]
    NotUnitary { defect: f64, tolerance: f64 },

    #[error("state is not normalized: |norm - 1| = {deviation:.3e}")]
    Unnormalized { deviation: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("negative alpha_z required, got {0}")]
    NonNegativeAlphaZ(f64),

    #[error("alpha_z must be non-negative, got {0}")]
    NegativeAlphaZ(f64),

    #[error("empty phase list")]
    EmptySpectrum,

    #[error("eigendecomposition did not converge: {0}")]
    Convergence(String),

    #[error("canonical decomposition failed: {0}")]
    Decomposition(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
