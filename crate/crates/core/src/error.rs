//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("dimension {0} is not a power of two")]
    BadDim(usize),
    #[error("{what}: {got} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("bad site selection: {0}")]
    BadSites(String),
    #[error("unsupported product-formula order {0}")]
    UnsupportedOrder(u32),
    #[error("phase solver failed, residual {residual:.3e}")]
    PhaseSolverFailed { residual: f64 },
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("bad split: {0}")]
    BadSplit(String),
    #[error("circuit contains unlowered gate {0}")]
    NotLowered(String),
    #[error("encoding is not self-inverse; use the general walk construction")]
    NotSelfInverse,
    #[error("bad arguments: {0}")]
    BadArgs(String),
}

impl SimError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SimError::NonHermitian(_) => "NON_HERMITIAN",
            SimError::BadDim(_) => "BAD_DIM",
            SimError::TooLarge { .. } => "TOO_LARGE",
            SimError::BadSites(_) => "BAD_SITES",
            SimError::UnsupportedOrder(_) => "UNSUPPORTED_ORDER",
            SimError::PhaseSolverFailed { .. } => "PHASE_SOLVER_FAILED",
            SimError::Infeasible(_) => "INFEASIBLE",
            SimError::BadSplit(_) => "BAD_SPLIT",
            SimError::NotLowered(_) => "NOT_LOWERED",
            SimError::NotSelfInverse => "NOT_SELF_INVERSE",
            SimError::BadArgs(_) => "BAD_ARGS",
        }
    }
}

pub type SimResult<T> = Result<T, SimError>;
