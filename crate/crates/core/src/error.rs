//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by matrix construction, factorizations, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand sizes do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A dense-path operation was asked for a matrix above the desk-scale cap.
    #[error("dense guard exceeded: n = {n} > {max}")]
    DenseGuard { n: usize, max: usize },

    /// CSR arrays fail a structural invariant.
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    /// A matrix flagged (or required to be) symmetric is not.
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    /// A non-finite value (NaN or infinity) reached a numerical kernel.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A smoother met a zero diagonal entry.
    #[error("zero diagonal entry at row {row}")]
    ZeroDiagonal { row: usize },

    /// Elimination hit a zero pivot.
    #[error("zero pivot at row {row} during incomplete factorization")]
    ZeroPivot { row: usize },

    /// Incomplete Cholesky met a nonpositive pivot; the factorization is unusable.
    #[error("incomplete Cholesky breakdown: nonpositive pivot {pivot:.6e} at row {row}")]
    IcBreakdown { row: usize, pivot: f64 },

    /// Multigrid setup could not build a usable hierarchy.
    #[error("multigrid setup failed: {0}")]
    AmgSetup(String),

    /// PCG was handed a preconditioner that does not declare self-adjointness.
    #[error("preconditioner is not self-adjoint; PCG requires a symmetric preconditioner")]
    NotSelfAdjoint,

    /// PCG observed a nonpositive curvature or preconditioned inner product,
    /// the runtime symptom of an indefinite operator or preconditioner.
    #[error("indefiniteness detected at iteration {iteration} ({quantity} = {value:.6e})")]
    IndefinitenessDetected {
        iteration: usize,
        quantity: &'static str,
        value: f64,
    },

    /// Invalid argument outside the other categories.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The generated problem has no stored exact solution.
    #[error("problem carries no manufactured solution")]
    MissingExactSolution,

    /// Matrix Market or right-hand-side file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
