//! Compositions of a smoother S and an inner preconditioner B around a matrix
//! A, applied matrix-free from a zero initial guess.
//!
//! The multiplicative composition chains the corrections S, B, Sᵀ, so its
//! error propagation factors as (I − SᵀA)(I − BA)(I − SA). When S is
//! non-expansive in the A-norm and B is SPD, the induced operator is SPD — the
//! sandwich symmetrizes S by construction, and the middle factor cannot push
//! the spectrum across zero. The additive composition is S̃ + B with
//! S̃ = S + Sᵀ − SᵀAS. The wrong-order composition chains B, S̃, B instead;
//! it is symmetric but can lose positive definiteness, and exists as a
//! diagnostic of why the ordering matters.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{symmetrized_apply, LinearOperator};
use crate::sparse::{SparseMatrix, Vector};

/// How the smoother and the inner preconditioner compose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// Corrections S, B, Sᵀ in sequence.
    Multiplicative,
    /// S̃ + B.
    Additive,
    /// Corrections B, S̃, B in sequence; symmetric but possibly indefinite.
    WrongOrderDiagnostic,
}

/// A preconditioner assembled from a smoother and an inner SPD operator.
pub struct CombinedPreconditioner {
    a: Arc<SparseMatrix>,
    smoother: Arc<dyn LinearOperator>,
    inner: Arc<dyn LinearOperator>,
    mode: CombineMode,
}

impl CombinedPreconditioner {
    pub fn new(
        a: Arc<SparseMatrix>,
        smoother: Arc<dyn LinearOperator>,
        inner: Arc<dyn LinearOperator>,
        mode: CombineMode,
    ) -> Result<Self> {
        let n = a.n_rows();
        if !a.is_square() {
            return Err(Error::InvalidStructure(
                "combined preconditioner requires a square matrix".into(),
            ));
        }
        for (name, op) in [("smoother", &smoother), ("inner preconditioner", &inner)] {
            if op.n_rows() != n || op.n_cols() != n {
                return Err(Error::InvalidStructure(format!(
                    "{name} is {}x{}, matrix is {n}x{n}",
                    op.n_rows(),
                    op.n_cols()
                )));
            }
        }
        Ok(Self {
            a,
            smoother,
            inner,
            mode,
        })
    }

    pub fn mode(&self) -> CombineMode {
        self.mode
    }

    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.a
    }

    fn residual(&self, f: &[f64], x: &[f64]) -> Result<Vector> {
        let ax = self.a.spmv(x)?;
        Ok(f.iter().zip(&ax).map(|(a, b)| a - b).collect())
    }

    fn add_correction(x: &mut Vector, c: &[f64]) {
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi += ci;
        }
    }

    /// The three-step correction chain S, B, Sᵀ from a zero guess.
    pub fn apply_multiplicative(&self, f: &[f64]) -> Result<Vector> {
        let mut x = self.smoother.apply(f)?;
        let r = self.residual(f, &x)?;
        Self::add_correction(&mut x, &self.inner.apply(&r)?);
        let r = self.residual(f, &x)?;
        Self::add_correction(&mut x, &self.smoother.apply_transpose(&r)?);
        Ok(x)
    }

    /// The additive combination S̃·f + B·f.
    pub fn apply_additive(&self, f: &[f64]) -> Result<Vector> {
        let mut x = symmetrized_apply(self.smoother.as_ref(), &self.a, f)?;
        Self::add_correction(&mut x, &self.inner.apply(f)?);
        Ok(x)
    }

    /// The correction chain B, S̃, B from a zero guess.
    pub fn apply_wrong_order(&self, f: &[f64]) -> Result<Vector> {
        let mut x = self.inner.apply(f)?;
        let r = self.residual(f, &x)?;
        Self::add_correction(
            &mut x,
            &symmetrized_apply(self.smoother.as_ref(), &self.a, &r)?,
        );
        let r = self.residual(f, &x)?;
        Self::add_correction(&mut x, &self.inner.apply(&r)?);
        Ok(x)
    }
}

impl LinearOperator for CombinedPreconditioner {
    fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.a.n_rows()
    }

    fn apply(&self, f: &[f64]) -> Result<Vector> {
        if f.len() != self.a.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "combined apply",
                expected: self.a.n_rows(),
                found: f.len(),
            });
        }
        match self.mode {
            CombineMode::Multiplicative => self.apply_multiplicative(f),
            CombineMode::Additive => self.apply_additive(f),
            CombineMode::WrongOrderDiagnostic => self.apply_wrong_order(f),
        }
    }

    fn apply_transpose(&self, f: &[f64]) -> Result<Vector> {
        // Each mode is self-adjoint when the inner operator is: the sandwich
        // and the symmetrization wrap any smoother symmetrically.
        self.apply(f)
    }

    fn is_self_adjoint(&self) -> bool {
        self.inner.is_self_adjoint()
    }
}
