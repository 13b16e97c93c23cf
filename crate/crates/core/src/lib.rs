//! Sparse SPD solver toolkit: preconditioned conjugate gradients, classical
//! algebraic multigrid, incomplete factorizations, and a combined
//! smoother-sandwich preconditioner, with spectral certificates that check the
//! underlying operator theory numerically.
//!
//! The centerpiece is [`combined::CombinedPreconditioner`]: given a
//! non-expansive smoother S (a Gauss-Seidel sweep or an AMG V-cycle) and an
//! SPD preconditioner B (typically incomplete Cholesky), it applies the three
//! corrections S, B, Sᵀ from a zero initial guess. The induced operator is
//! SPD, so it drives PCG safely, and its condition number can be certified
//! against closed-form bounds by the [`spectral`] module.
//!
//! Modules:
//! - [`sparse`]: CSR storage, dense oracle matrices, Matrix Market IO.
//! - [`operator`]: the `LinearOperator` contract everything composes through.
//! - [`smoothers`]: Jacobi and Gauss-Seidel sweeps with exact transposes.
//! - [`ilu`]: level-of-fill ILU(k) and incomplete Cholesky IC(k).
//! - [`amg`]: Ruge-Stuben setup and the symmetric V-cycle.
//! - [`combined`]: multiplicative, additive, and wrong-order compositions.
//! - [`krylov`]: PCG with true-residual stopping and Lanczos estimates.
//! - [`problems`]: structured-grid diffusion problems with jump coefficients.
//! - [`spectral`]: dense eigenvalue certificates for the operator identities.

pub mod amg;
pub mod combined;
pub mod error;
pub mod guide;
pub mod ilu;
pub mod krylov;
pub mod operator;
pub mod problems;
pub mod smoothers;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
