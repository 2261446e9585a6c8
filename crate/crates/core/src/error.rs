use thiserror::Error;

use crate::gaussian::Basis;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no connected graph after {attempts} attempts")]
    Infeasible { attempts: u64 },

    #[error("saturated graph: no absent pair to rewire into")]
    SaturatedGraph,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("unphysical covariance (smallest symplectic eigenvalue {min_symplectic})")]
    Unphysical { min_symplectic: f64 },

    #[error("probe assumptions violated: {0}")]
    ProbeViolated(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("divergent integrand: {0}")]
    Divergent(String),

    #[error("graph file: {0}")]
    GraphFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
