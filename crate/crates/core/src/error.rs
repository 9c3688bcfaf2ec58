use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// `|tau| * max|U|` on the grid exceeded `limit` (`0.5 * hbar`).
    #[error("stability guard violated: |tau|*max|U| = {product:.6e} exceeds {limit:.6e}")]
    Stability { product: f64, limit: f64 },

    #[error("degenerate fit: only {usable} usable points (need at least 3)")]
    DegenerateFit { usable: usize },

    #[error("non-uniform sampling stride at record {index}: dt = {found:.17e}, expected {expected:.17e}")]
    NonUniformStride {
        index: usize,
        found: f64,
        expected: f64,
    },

    #[error("insufficient samples: {retained} retained, need at least {required}")]
    InsufficientSamples { retained: usize, required: usize },

    #[error("extrapolation did not converge: {0}")]
    NonConvergence(String),

    #[error("matrix exponential failed: {0}")]
    MatrixExponential(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
