use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("pattern index {index} out of range for width {width} (must be < 2^{width})")]
    IndexOutOfRange { index: usize, width: usize },

    #[error(
        "width {width} exceeds the {representation} operator limit of {limit} \
         (would need about {bytes} bytes)"
    )]
    Capacity {
        width: usize,
        limit: usize,
        representation: &'static str,
        bytes: u128,
    },

    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("operator is reducible: only {reachable} of {allowed} allowed patterns are mutually reachable")]
    Reducible { reachable: usize, allowed: usize },

    #[error("operator has no allowed patterns")]
    EmptyOperator,

    #[error(
        "context (before={before}, after={after}) does not fit width {width}; \
         max feasible is before<={max_before}, after<={max_after}"
    )]
    ShapeOverflow {
        width: usize,
        before: usize,
        after: usize,
        max_before: usize,
        max_after: usize,
    },

    #[error("context (before={before}, after={after}) too small: energy needs before>=1 and after>=1")]
    ShapeTooSmall { before: usize, after: usize },

    #[error("reduced model family is missing shape (before={before}, after={after})")]
    MissingReducedShape { before: usize, after: usize },

    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("ensemble has zero total weight (over-constrained)")]
    EmptyEnsemble,

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Reducible { .. } | Error::EmptyOperator | Error::EmptyEnsemble
        )
    }
}
