use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the oracle domain: {0}")]
    OutsideDomain(String),

    #[error("no derivative oracle of order {order}")]
    MissingOracle { order: usize },

    #[error("unsupported problem structure: {0}")]
    Unsupported(String),

    #[error("operation needs a {expected} instance")]
    ProblemMismatch { expected: &'static str },

    #[error("linear system is singular")]
    Singular,

    #[error("linear system is ill-conditioned (estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("{routine} exceeded {cap} steps (bracket {lo:.6e}..{up:.6e})")]
    LineSearchCap { routine: &'static str, cap: usize, lo: f64, up: f64 },

    #[error("inner solve hit its cap of {cap} iterations at eta={eta:.6e} (residual {residual:.3e})")]
    InnerCap { cap: usize, eta: f64, residual: f64 },

    #[error("reference point not found: residual {residual:.3e} after {iterations} iterations")]
    ReferenceFailed { residual: f64, iterations: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
