use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix failed the Hermitian / unit-trace / positivity checks.
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: error estimate {error_estimate:e} after {subdivisions} subdivisions")]
    NonConvergence { error_estimate: f64, subdivisions: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
