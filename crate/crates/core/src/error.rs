use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root finder or series failed to converge.
    #[error("no convergence in {what}: bracket [{lo}, {hi}], last value {last}")]
    Convergence {
        what: &'static str,
        lo: f64,
        hi: f64,
        last: f64,
    },

    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:e}, wanted {wanted:e}")]
    Quadrature { achieved: f64, wanted: f64 },

    /// The series has zero variance, so (w, z) are undefined.
    #[error("degenerate series: estimated variance is zero")]
    Degenerate,

    /// The variance estimate needs at least two increments.
    #[error("variance unavailable: need at least two increments, got {0}")]
    VarianceUnavailable(usize),

    /// A CI method cannot produce an answer at this point.
    #[error("method {method} not applicable: {reason}")]
    Inapplicable { method: &'static str, reason: String },

    /// No admissible solution below the search cap.
    #[error("no solution found up to the cap {cap}")]
    Unsatisfiable { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
