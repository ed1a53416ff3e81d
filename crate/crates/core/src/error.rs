use thiserror::Error;

/// Errors produced by the numerical layers of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// Parameter set violates an invariant. The message lists every violation.
    #[error("invalid parameters: {0}")]
    InvalidParams(alloc::string::String),

    /// A quadrature did not reach the requested tolerance. Carries the best
    /// estimate and the achieved error bound so callers can decide whether
    /// the value is still usable.
    #[error("quadrature failed to converge: estimate {estimate:?}, error bound {error:.3e}, tolerance {tolerance:.3e}")]
    QuadratureNonConvergent {
        estimate: num_complex::Complex64,
        error: f64,
        tolerance: f64,
    },

    /// Normalization by a power of t0 = 1 - 2*beta is singular (beta = 1/2).
    #[error("singular normalization: resonant transmission t0 = {t0:.3e} too close to zero")]
    SingularNormalization { t0: f64 },
}
