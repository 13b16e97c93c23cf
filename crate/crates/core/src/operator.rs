//! The operator contract shared by matrices, smoothers, factorizations, and
//! multigrid cycles.
//!
//! Everything a Krylov method or a preconditioner composition needs is an
//! action `x ↦ Mx`, the transposed action, and an honest declaration of
//! self-adjointness. Operators are immutable after construction, so `&self`
//! application is reentrant.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, Symmetry, Vector};

/// A real linear operator with a transpose.
///
/// `is_self_adjoint` must only return `true` when `apply` and
/// `apply_transpose` agree exactly as operators; consumers such as PCG rely on
/// the declaration instead of probing numerically.
pub trait LinearOperator: Send + Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vector>;
    fn apply_transpose(&self, x: &[f64]) -> Result<Vector>;
    fn is_self_adjoint(&self) -> bool;
}

impl LinearOperator for SparseMatrix {
    fn n_rows(&self) -> usize {
        SparseMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        SparseMatrix::n_cols(self)
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        self.spmv(x)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        self.spmv_transpose(x)
    }

    fn is_self_adjoint(&self) -> bool {
        self.symmetry() == Symmetry::Symmetric
    }
}

impl crate::sparse::DenseMatrix {
    fn dense_apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "dense apply_transpose",
                expected: self.n_rows(),
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols()];
        for (i, &xi) in x.iter().enumerate() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.get(i, j) * xi;
            }
        }
        Ok(y)
    }
}

impl LinearOperator for crate::sparse::DenseMatrix {
    fn n_rows(&self) -> usize {
        crate::sparse::DenseMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        crate::sparse::DenseMatrix::n_cols(self)
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        self.mul_vec(x)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        self.dense_apply_transpose(x)
    }

    fn is_self_adjoint(&self) -> bool {
        self.n_rows() == self.n_cols() && self.max_asymmetry() == 0.0
    }
}

/// The identity of a given size.
#[derive(Debug, Clone)]
pub struct IdentityOperator {
    n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for IdentityOperator {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn n_cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "identity apply",
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(x.to_vec())
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        self.apply(x)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}

/// The zero operator of a given square size; useful for degenerate
/// compositions where one slot is switched off.
#[derive(Debug, Clone)]
pub struct ZeroOperator {
    n: usize,
}

impl ZeroOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for ZeroOperator {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn n_cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "zero apply",
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(vec![0.0; self.n])
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        self.apply(x)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}

/// `factor * inner`, used to rescale a preconditioner without rebuilding it.
pub struct ScaledOperator {
    inner: Arc<dyn LinearOperator>,
    factor: f64,
}

impl ScaledOperator {
    pub fn new(inner: Arc<dyn LinearOperator>, factor: f64) -> Self {
        Self { inner, factor }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl LinearOperator for ScaledOperator {
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        let mut y = self.inner.apply(x)?;
        for v in &mut y {
            *v *= self.factor;
        }
        Ok(y)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        let mut y = self.inner.apply_transpose(x)?;
        for v in &mut y {
            *v *= self.factor;
        }
        Ok(y)
    }

    fn is_self_adjoint(&self) -> bool {
        self.inner.is_self_adjoint()
    }
}

/// Applies the symmetrization of `op` with respect to `a`:
/// `r ↦ op(r) + opᵀ(r − A·op(r))`.
///
/// The induced operator T satisfies I − TA = (I − opᵀA)(I − opA), so T is
/// self-adjoint whenever A is symmetric, regardless of op.
pub fn symmetrized_apply(
    op: &dyn LinearOperator,
    a: &SparseMatrix,
    r: &[f64],
) -> Result<Vector> {
    let x = op.apply(r)?;
    let ax = a.spmv(&x)?;
    let resid: Vector = r.iter().zip(&ax).map(|(f, v)| f - v).collect();
    let y = op.apply_transpose(&resid)?;
    Ok(x.iter().zip(&y).map(|(a, b)| a + b).collect())
}
