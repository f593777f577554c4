use crate::spectral::SpectralField;

/// Errors raised by the solver and the verification toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent grid, resolution or run parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a structural invariant (e.g. Hermitian symmetry).
    #[error("data error: {0}")]
    Data(String),

    /// The Galerkin state exceeded the blow-up threshold.
    #[error("blow-up at t = {t}: ||v||_1 = {seminorm:e} exceeds threshold")]
    Blowup { t: f64, seminorm: f64 },

    /// A coefficient became NaN or infinite.
    #[error("numerical failure at t = {t}: non-finite coefficient")]
    NumericalFailure {
        t: f64,
        last_valid: Box<SpectralField>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
