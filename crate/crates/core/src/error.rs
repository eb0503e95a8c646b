use thiserror::Error;

use crate::problem::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },

    #[error("node bound at index {index} lies outside the root box")]
    BoundsOutsideRoot { index: usize },

    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidProblem(Vec<Violation>),

    #[error("matrix must be stored as its upper triangle")]
    NotUpperTriangular,

    #[error("zero pivot at position {index} after regularization")]
    ZeroPivot { index: usize },

    #[error("iterative refinement diverged (residual {residual:e})")]
    RefinementDiverged { residual: f64 },

    #[error("box on variable {index} has empty interior (l > u)")]
    EmptyBox { index: usize },

    #[error("simple correction needs finite bounds; variable {index} is unbounded")]
    InfiniteBound { index: usize },

    #[error("[P, I_B^T, G^T] is rank deficient: {rank} < {n}")]
    RankDeficient { rank: usize, n: usize },

    #[error("correction left a dual residual of {residual:e}")]
    CorrectionInfeasible { residual: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed problem file: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
