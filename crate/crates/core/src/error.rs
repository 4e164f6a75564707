//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the simulator and the certificate checks.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model parameter that must be strictly positive is not.
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(String),

    /// A domain description is inconsistent (dimension, lengths, resolution).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Configuration file could not be parsed.
    #[error("config error: {0}")]
    ConfigParse(String),

    /// Array sizes do not match the domain resolution.
    #[error("shape mismatch: expected {expected}, got {got} ({context})")]
    ShapeMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// A mode index lies outside `1..=modes_per_axis`.
    #[error("mode index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    /// The state left the finite range the integrator can represent.
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    /// Gram-Schmidt hit a direction of (numerically) zero length.
    #[error("rank deficient tangent set: direction {index} has growth factor {factor:e}")]
    RankDeficient { index: usize, factor: f64 },

    /// The two states of a difference quotient coincide.
    #[error("zero difference: the two states coincide in L^2")]
    ZeroDifference,

    /// Displacements too small for a meaningful log-log fit.
    #[error("degenerate fit: displacements below {0:e}")]
    DegenerateFit(f64),

    /// Lyapunov exponents still drifting between averaging windows.
    #[error("lyapunov estimate not converged: drift {drift:e} > tol {tol:e}")]
    NotConverged { drift: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
