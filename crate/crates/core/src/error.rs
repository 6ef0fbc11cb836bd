use thiserror::Error;

pub type Result<T> = std::result::Result<T, DrppError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DrppError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The robust surrogate is not certified strongly concave in zeta.
    #[error("inner problem is not strongly concave (mu = {mu})")]
    ConcavityViolation { mu: f64 },

    /// The frozen retraining objective is not certified strongly convex in theta.
    #[error("retraining objective is not strongly convex (gamma = {gamma})")]
    ConvexityViolation { gamma: f64 },

    #[error("{solver} did not converge after {iters} iterations (gap {gap:e})")]
    NotConverged {
        solver: &'static str,
        iters: usize,
        gap: f64,
        best: Vec<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("state error: {0}")]
    State(String),
}

pub(crate) fn ensure_finite(context: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DrppError::InvalidArgument(format!("{context}: non-finite entry")))
    }
}

pub(crate) fn ensure_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(DrppError::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
