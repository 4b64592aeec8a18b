//! Error type shared by all numeric modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Cholesky pivot fell below the negative tolerance band.
    #[error("matrix is not positive semi-definite: pivot {pivot:.6e} below -{tol:.6e}")]
    NotPsd { pivot: f64, tol: f64 },

    /// A strict Cholesky pivot was non-positive.
    #[error("matrix is not positive definite: pivot {pivot:.6e} at column {col}")]
    NotPd { pivot: f64, col: usize },

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input entries are not conjugate-symmetric within tolerance.
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.6e}")]
    NotHermitian { max_asymmetry: f64 },

    /// A 1-based sequence index outside `1..=len`.
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Two-index gain form called with indices out of order.
    #[error("invalid index order: need i1 < i2, got i1 = {i1}, i2 = {i2}")]
    InvalidOrder { i1: usize, i2: usize },

    /// A scalar argument outside its documented domain.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Codeword resampling hit the attempt cap; the input covariance trace
    /// sits too close to the power budget for this block length.
    #[error("codeword rejection exhausted after {attempts} attempts at block length {n}")]
    RejectionExhausted { attempts: usize, n: usize },

    /// Requested codebook cannot be materialized.
    #[error("codebook size 2^{exponent:.2} exceeds the 2^{cap_log2} materialization cap")]
    CodebookTooLarge { exponent: f64, cap_log2: u32 },
}
