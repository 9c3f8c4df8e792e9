use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped so a caller can map them onto process exit codes:
/// invalid input, solver failure, and positivity/closing violations are
/// distinct failure classes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The geometry quadruple itself is rejected (wrong regime, bad ranges).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    /// A scalar argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A point query landed outside the representable domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Bracketing, bisection, quadrature, or stepping did not converge.
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// The profile or a metric eigenvalue failed to stay positive.
    #[error("positivity violation: {0}")]
    Positivity(String),
    /// A post-solve assertion that should hold by construction failed.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
