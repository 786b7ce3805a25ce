use thiserror::Error;

/// Errors raised by the entanglement computations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("matrix does not have the six-element structure: {0}")]
    StructureViolation(String),

    #[error("expected a positive amplitude, got {0}")]
    NonPositive(f64),

    #[error("state is not entangled (concurrence {0:e})")]
    NotEntangled(f64),

    #[error("degenerate parameters for the closed form: {0}")]
    DegenerateParams(String),

    #[error("{solver} did not converge: residual {residual:e} after {iterations} iterations")]
    ConvergenceFailure {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("optimality certificate failed: {0}")]
    CertificationFailure(String),

    #[error("closest separable state lacks support: eigenvalue {eigenvalue:e} at index {index}")]
    SupportDeficient { index: usize, eigenvalue: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
