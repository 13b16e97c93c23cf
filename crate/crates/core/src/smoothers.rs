//! Stationary smoothers in correction form: input a residual, output a
//! correction.
//!
//! Each kind supplies an exact transpose, because the combined preconditioner
//! and the symmetric V-cycle apply Sᵀ literally; an approximate transpose
//! would silently break the operator identities the spectral module certifies.
//! The transposed triangular solves run directly on the CSR rows of A via
//! scatter updates, so no transposed copy of A is ever formed.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{symmetrized_apply, LinearOperator};
use crate::sparse::{SparseMatrix, Symmetry, Vector};

/// The stationary iteration family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmootherKind {
    /// Weighted Jacobi, `x = weight · D⁻¹ r`; weight must lie in (0, 1].
    Jacobi(f64),
    /// Forward Gauss-Seidel: solve `(D + L) x = r` with the lower triangle of A.
    GaussSeidelForward,
    /// Backward Gauss-Seidel: solve `(D + U) x = r` with the upper triangle of A.
    GaussSeidelBackward,
    /// Forward sweep followed by a backward sweep on the updated residual.
    GaussSeidelSymmetric,
}

/// A smoother bound to a matrix, applying `sweeps` repetitions of the base
/// iteration on the error equation.
pub struct Smoother {
    kind: SmootherKind,
    a: Arc<SparseMatrix>,
    sweeps: usize,
}

impl Smoother {
    pub fn new(kind: SmootherKind, a: Arc<SparseMatrix>, sweeps: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidStructure(
                "smoother requires a square matrix".into(),
            ));
        }
        if sweeps == 0 {
            return Err(Error::InvalidParameter("sweeps must be at least 1".into()));
        }
        if let SmootherKind::Jacobi(w) = kind {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Jacobi weight {w} outside (0, 1]"
                )));
            }
        }
        for i in 0..a.n_rows() {
            let d = a.get(i, i);
            if d == 0.0 {
                return Err(Error::ZeroDiagonal { row: i });
            }
            if d < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative diagonal {d} at row {i}"
                )));
            }
        }
        Ok(Self { kind, a, sweeps })
    }

    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.a
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// One application of the base iteration from a zero guess.
    fn single(&self, r: &[f64]) -> Result<Vector> {
        match self.kind {
            SmootherKind::Jacobi(w) => Ok(self.jacobi(r, w)),
            SmootherKind::GaussSeidelForward => Ok(self.lower_solve(r)),
            SmootherKind::GaussSeidelBackward => Ok(self.upper_solve(r)),
            SmootherKind::GaussSeidelSymmetric => {
                // x1 = forward correction; then a backward correction of the
                // updated residual, composing the two triangular solves.
                let x1 = self.lower_solve(r);
                let ax = self.a.spmv(&x1)?;
                let resid: Vector = r.iter().zip(&ax).map(|(f, v)| f - v).collect();
                let x2 = self.upper_solve(&resid);
                Ok(x1.iter().zip(&x2).map(|(a, b)| a + b).collect())
            }
        }
    }

    /// One application of the exact transpose of the base iteration.
    fn single_transpose(&self, r: &[f64]) -> Result<Vector> {
        match self.kind {
            SmootherKind::Jacobi(w) => Ok(self.jacobi(r, w)),
            SmootherKind::GaussSeidelForward => Ok(self.lower_transpose_solve(r)),
            SmootherKind::GaussSeidelBackward => Ok(self.upper_transpose_solve(r)),
            SmootherKind::GaussSeidelSymmetric => {
                // Transpose of (forward then backward) is (backwardᵀ then
                // forwardᵀ) with Aᵀ in the residual update.
                let x1 = self.upper_transpose_solve(r);
                let ax = self.a.spmv_transpose(&x1)?;
                let resid: Vector = r.iter().zip(&ax).map(|(f, v)| f - v).collect();
                let x2 = self.lower_transpose_solve(&resid);
                Ok(x1.iter().zip(&x2).map(|(a, b)| a + b).collect())
            }
        }
    }

    fn jacobi(&self, r: &[f64], w: f64) -> Vector {
        (0..self.a.n_rows())
            .map(|i| w * r[i] / self.a.get(i, i))
            .collect()
    }

    /// Forward substitution with the lower triangle of A, `(D + L) x = r`.
    fn lower_solve(&self, r: &[f64]) -> Vector {
        let n = self.a.n_rows();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = self.a.row(i);
            let mut acc = r[i];
            let mut diag = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    acc -= v * x[j];
                } else if j == i {
                    diag = v;
                } else {
                    break;
                }
            }
            x[i] = acc / diag;
        }
        x
    }

    /// Backward substitution with the upper triangle of A, `(D + U) x = r`.
    fn upper_solve(&self, r: &[f64]) -> Vector {
        let n = self.a.n_rows();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let (cols, vals) = self.a.row(i);
            let mut acc = r[i];
            let mut diag = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j > i {
                    acc -= v * x[j];
                } else if j == i {
                    diag = v;
                }
            }
            x[i] = acc / diag;
        }
        x
    }

    /// Solves `(D + L)ᵀ x = r` by scattering each row of the lower triangle,
    /// visiting rows last to first so x[i] is final before its row scatters.
    fn lower_transpose_solve(&self, r: &[f64]) -> Vector {
        let n = self.a.n_rows();
        let mut t = r.to_vec();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            x[i] = t[i] / self.a.get(i, i);
            let (cols, vals) = self.a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= i {
                    break;
                }
                t[j] -= v * x[i];
            }
        }
        x
    }

    /// Solves `(D + U)ᵀ x = r` by scattering each row of the upper triangle,
    /// visiting rows first to last.
    fn upper_transpose_solve(&self, r: &[f64]) -> Vector {
        let n = self.a.n_rows();
        let mut t = r.to_vec();
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = t[i] / self.a.get(i, i);
            let (cols, vals) = self.a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j > i {
                    t[j] -= v * x[i];
                }
            }
        }
        x
    }

    /// Multi-sweep composition on the error equation: after k sweeps the
    /// error propagation is (I − S₁A)ᵏ.
    fn sweep(
        &self,
        r: &[f64],
        single: impl Fn(&Self, &[f64]) -> Result<Vector>,
        matvec: impl Fn(&SparseMatrix, &[f64]) -> Result<Vector>,
    ) -> Result<Vector> {
        let mut x = single(self, r)?;
        for _ in 1..self.sweeps {
            let ax = matvec(&self.a, &x)?;
            let resid: Vector = r.iter().zip(&ax).map(|(f, v)| f - v).collect();
            let c = single(self, &resid)?;
            for (xi, ci) in x.iter_mut().zip(&c) {
                *xi += ci;
            }
        }
        Ok(x)
    }

    fn check_len(&self, r: &[f64], context: &'static str) -> Result<()> {
        if r.len() != self.a.n_rows() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.a.n_rows(),
                found: r.len(),
            });
        }
        Ok(())
    }

    /// The correction `S r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vector> {
        self.check_len(r, "smoother apply")?;
        self.sweep(r, Self::single, SparseMatrix::spmv)
    }

    /// The exact transposed correction `Sᵀ r`. The transpose of the k-sweep
    /// iteration is the k-sweep iteration of the transposed base smoother on
    /// Aᵀ, which the residual update below realizes.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vector> {
        self.check_len(r, "smoother apply_transpose")?;
        self.sweep(r, Self::single_transpose, SparseMatrix::spmv_transpose)
    }

    /// The symmetrized correction `(S + Sᵀ − SᵀAS) r`, computed as
    /// `apply(r) + apply_transpose(r − A·apply(r))`.
    pub fn symmetrized_apply(&self, r: &[f64]) -> Result<Vector> {
        self.check_len(r, "smoother symmetrized_apply")?;
        symmetrized_apply(self, &self.a, r)
    }
}

impl LinearOperator for Smoother {
    fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.a.n_rows()
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        Smoother::apply(self, x)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        Smoother::apply_transpose(self, x)
    }

    fn is_self_adjoint(&self) -> bool {
        // Jacobi is diagonal; the symmetric sweep is self-adjoint exactly when
        // A is. Multi-sweep preserves this: the k-sweep operator is a
        // polynomial in (base · A) times the base operator.
        match self.kind {
            SmootherKind::Jacobi(_) => true,
            SmootherKind::GaussSeidelSymmetric => self.a.symmetry() == Symmetry::Symmetric,
            _ => false,
        }
    }
}
