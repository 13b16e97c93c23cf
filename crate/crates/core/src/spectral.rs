//! Dense spectral certification of preconditioner quality.
//!
//! Everything a claim about a preconditioner rests on is measurable at desk
//! scale: the smoother contraction factor ρ = ‖I − SA‖²_A, the extreme
//! eigenvalues m₀ ≤ m₁ of the preconditioned operator BA, and the condition
//! number of the combined operator. This module assembles operators densely
//! by probing with coordinate basis vectors and solves the resulting
//! generalized eigenproblems by congruence with a dense Cholesky factor of A,
//! so the numbers it reports are ground truth up to dense-arithmetic
//! roundoff, not iterative estimates.
//!
//! The headline result being certified: when the smoother is non-expansive
//! (ρ ≤ 1) and B is SPD, the sandwich composition is SPD and
//!
//! ```text
//! κ(B_co A) ≤ [(1 − m₁)(1 − ρ) + m₁] / [(1 − m₀)(1 − ρ) + m₀]
//! ```
//!
//! with strict improvement over κ(BA) once m₁ > 1 ≥ m₀. The comparison is
//! stated under the normalization m₀ = 1, which `scale_to_unit_m0` enforces
//! by rescaling B with σ = 1/m₀; PCG is indifferent to that rescaling, so it
//! is purely a bookkeeping convention.
//!
//! Sizes are capped at [`MAX_DENSE_DIM`]; this module is a measuring
//! instrument, not a solver.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::combined::{CombineMode, CombinedPreconditioner};
use crate::error::{Error, Result};
use crate::operator::{symmetrized_apply, LinearOperator, ScaledOperator};
use crate::sparse::{DenseMatrix, SparseMatrix, Vector, MAX_DENSE_DIM};

/// Slack added to eigenvalue-based inequalities before declaring violation.
pub const BOUND_SLACK: f64 = 1e-8;

/// Relative symmetry tolerance for dense SPD checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Non-expansiveness margin: ρ may exceed 1 by at most this much.
pub const EXPANSION_TOL: f64 = 1e-10;

/// Measured spectral data for a smoother + inner-preconditioner pair.
///
/// All eigenvalue fields refer to the *scaled* inner preconditioner σ·B with
/// σ = 1/m₀, so `m0` is 1 up to roundoff whenever scaling applied. The
/// condition numbers are invariant under that scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralCertificate {
    /// Contraction factor ‖I − SA‖²_A = 1 − λ_min(S̃A).
    pub rho: f64,
    /// ρ ≤ 1 within [`EXPANSION_TOL`]; the hypothesis every guarantee needs.
    pub smoother_non_expansive: bool,
    /// λ_min of the scaled BA.
    pub m0: f64,
    /// λ_max of the scaled BA.
    pub m1: f64,
    /// Scale factor applied to B, σ = 1/λ_min(BA) as measured.
    pub sigma: f64,
    /// Whether σ differs from 1 beyond roundoff.
    pub scaled: bool,
    /// κ(BA) = m₁/m₀.
    pub kappa_b: f64,
    /// κ(S̃A), the condition number the symmetrized smoother alone achieves.
    pub kappa_s: f64,
    /// κ(B_co A) for the multiplicative composition, measured densely.
    pub kappa_combined: f64,
    /// [(1−m₁)(1−ρ)+m₁] / [(1−m₀)(1−ρ)+m₀], evaluated at the measured values.
    pub kappa_bound: f64,
    /// ρ value past which the combined operator is guaranteed no worse than
    /// the smoother alone: 1 − m₀/(m₁−1). Absent when m₁ ≤ 1.
    pub threshold_rho: Option<f64>,
    /// True when the comparison hypotheses hold as measured: ρ < 1 and
    /// m₁ > 1 after scaling. When false the κ fields are still reported but
    /// no inequality between them is claimed.
    pub applicable: bool,
}

/// Result of a dense SPD check on an assembled operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpdReport {
    pub n: usize,
    /// max |M_ij − M_ji| over the assembled matrix.
    pub max_asymmetry: f64,
    /// The asymmetry budget used, [`SYMMETRY_TOL`] · max|M_ij|.
    pub symmetry_tol: f64,
    pub symmetric: bool,
    /// Smallest eigenvalue of the symmetrized assembly.
    pub lambda_min: f64,
    pub spd: bool,
}

/// A scale factor at which the diagnostic (B, S̃, B) composition loses
/// positive definiteness, together with the failed SPD check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WrongOrderWitness {
    pub sigma: f64,
    pub report: SpdReport,
}

fn dense_guard(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::DenseGuard {
            n,
            max: MAX_DENSE_DIM,
        });
    }
    Ok(())
}

/// Materializes `op` column by column: column j is `op(e_j)`.
pub fn assemble_dense_operator(op: &dyn LinearOperator) -> Result<DenseMatrix> {
    dense_guard(op.n_rows().max(op.n_cols()))?;
    let mut m = DenseMatrix::zeros(op.n_rows(), op.n_cols())?;
    let mut e: Vector = vec![0.0; op.n_cols()];
    for j in 0..op.n_cols() {
        e[j] = 1.0;
        let col = op.apply(&e)?;
        m.set_column(j, &col);
        e[j] = 0.0;
    }
    Ok(m)
}

/// Materializes the symmetrization S + Sᵀ − SᵀAS of `op` the same way.
pub fn assemble_dense_symmetrization(
    op: &dyn LinearOperator,
    a: &SparseMatrix,
) -> Result<DenseMatrix> {
    let n = a.n_rows();
    dense_guard(n)?;
    if op.n_rows() != n || op.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetrization assembly",
            expected: n,
            found: op.n_rows(),
        });
    }
    let mut m = DenseMatrix::zeros(n, n)?;
    let mut e: Vector = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = symmetrized_apply(op, a, &e)?;
        m.set_column(j, &col);
        e[j] = 0.0;
    }
    Ok(m)
}

/// Eigenvalues of M·A for symmetric M and SPD A, ascending.
///
/// With A = LLᵀ the product MA is similar to LᵀML, which is symmetric, so a
/// dense symmetric eigensolve on the congruence gives the spectrum without
/// ever forming the nonsymmetric product.
pub fn product_eigenvalues(m: &DenseMatrix, a: &DenseMatrix) -> Result<Vec<f64>> {
    if m.n_rows() != a.n_rows() || m.n_cols() != a.n_cols() || m.n_rows() != m.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "product eigenvalues",
            expected: a.n_rows(),
            found: m.n_rows(),
        });
    }
    let na_a = a.to_nalgebra();
    let chol = na_a.cholesky().ok_or_else(|| {
        Error::InvalidStructure("congruence eigensolve requires a positive definite A".into())
    })?;
    let l = chol.l();
    let c = l.transpose() * m.to_nalgebra() * &l;
    // M is symmetric only up to assembly roundoff; fold the halves together
    // before the symmetric eigensolve.
    let c_sym = 0.5 * (&c + c.transpose());
    let mut eigs: Vec<f64> = c_sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    Ok(eigs)
}

/// (λ_min, λ_max) of M·A via [`product_eigenvalues`].
pub fn product_eigenvalue_range(m: &DenseMatrix, a: &DenseMatrix) -> Result<(f64, f64)> {
    let eigs = product_eigenvalues(m, a)?;
    match (eigs.first(), eigs.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidStructure("empty eigenvalue set".into())),
    }
}

/// Contraction factor ρ = ‖I − SA‖²_A = 1 − λ_min(S̃A), measured densely.
pub fn estimate_rho(s: &dyn LinearOperator, a: &SparseMatrix) -> Result<f64> {
    let s_tilde = assemble_dense_symmetrization(s, a)?;
    let a_dense = a.to_dense()?;
    let (lo, _) = product_eigenvalue_range(&s_tilde, &a_dense)?;
    Ok(1.0 - lo)
}

/// Extreme eigenvalues (m₀, m₁) of BA, measured densely.
pub fn estimate_m0_m1(b: &dyn LinearOperator, a: &SparseMatrix) -> Result<(f64, f64)> {
    let b_dense = assemble_dense_operator(b)?;
    let a_dense = a.to_dense()?;
    product_eigenvalue_range(&b_dense, &a_dense)
}

/// Rescales `b` by σ = 1/λ_min(BA) so the scaled operator has m₀ = 1.
///
/// Returns the scaled operator and σ. Errors if the measured m₀ is not
/// positive, since then B is not an SPD preconditioner for A.
pub fn scale_to_unit_m0(
    b: Arc<dyn LinearOperator>,
    a: &SparseMatrix,
) -> Result<(Arc<dyn LinearOperator>, f64)> {
    let (m0, _) = estimate_m0_m1(b.as_ref(), a)?;
    if m0 <= 0.0 {
        return Err(Error::InvalidStructure(format!(
            "cannot normalize: measured lambda_min(BA) = {m0} is not positive"
        )));
    }
    let sigma = 1.0 / m0;
    Ok((Arc::new(ScaledOperator::new(b, sigma)), sigma))
}

/// Dense SPD check: assemble, compare against the transpose, and examine the
/// smallest eigenvalue of the symmetrized assembly.
pub fn certify_spd(op: &dyn LinearOperator) -> Result<SpdReport> {
    if op.n_rows() != op.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "SPD check",
            expected: op.n_rows(),
            found: op.n_cols(),
        });
    }
    let m = assemble_dense_operator(op)?;
    let max_asymmetry = m.max_asymmetry();
    let symmetry_tol = SYMMETRY_TOL * m.max_abs();
    let symmetric = max_asymmetry <= symmetry_tol;
    let na = m.to_nalgebra();
    let sym = 0.5 * (&na + na.transpose());
    let lambda_min = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(SpdReport {
        n: op.n_rows(),
        max_asymmetry,
        symmetry_tol,
        symmetric,
        lambda_min,
        spd: symmetric && lambda_min > 0.0,
    })
}

/// Measures every quantity the combined-preconditioner comparison speaks
/// about, with B normalized to m₀ = 1 first.
///
/// The certificate reports measured values unconditionally; `applicable`
/// records whether the hypotheses (ρ < 1, m₁ > 1 after scaling) held, which
/// is what decides whether `kappa_combined ≤ kappa_bound` and
/// `kappa_combined < kappa_b` are guaranteed rather than coincidental.
pub fn certify_combined(
    s: Arc<dyn LinearOperator>,
    b: Arc<dyn LinearOperator>,
    a: Arc<SparseMatrix>,
) -> Result<SpectralCertificate> {
    let rho = estimate_rho(s.as_ref(), &a)?;
    let smoother_non_expansive = rho <= 1.0 + EXPANSION_TOL;

    let (scaled_b, sigma) = scale_to_unit_m0(b, &a)?;
    let (m0, m1) = estimate_m0_m1(scaled_b.as_ref(), &a)?;

    let a_dense = a.to_dense()?;
    let s_tilde = assemble_dense_symmetrization(s.as_ref(), &a)?;
    let (s_lo, s_hi) = product_eigenvalue_range(&s_tilde, &a_dense)?;
    let kappa_s = if s_lo > 0.0 { s_hi / s_lo } else { f64::INFINITY };

    let combined = CombinedPreconditioner::new(
        Arc::clone(&a),
        s,
        scaled_b,
        CombineMode::Multiplicative,
    )?;
    let co_dense = assemble_dense_operator(&combined)?;
    let (co_lo, co_hi) = product_eigenvalue_range(&co_dense, &a_dense)?;
    if co_lo <= 0.0 {
        return Err(Error::InvalidStructure(format!(
            "combined operator not positive definite: lambda_min(B_co A) = {co_lo}"
        )));
    }
    let kappa_combined = co_hi / co_lo;

    let kappa_bound =
        ((1.0 - m1) * (1.0 - rho) + m1) / ((1.0 - m0) * (1.0 - rho) + m0);
    // Same margin as `applicable`: at m1 = 1 + roundoff the threshold formula
    // divides by noise.
    let threshold_rho = if m1 > 1.0 + EXPANSION_TOL {
        Some(1.0 - m0 / (m1 - 1.0))
    } else {
        None
    };

    Ok(SpectralCertificate {
        rho,
        smoother_non_expansive,
        m0,
        m1,
        sigma,
        scaled: (sigma - 1.0).abs() > 1e-12,
        kappa_b: m1 / m0,
        kappa_s,
        kappa_combined,
        kappa_bound,
        threshold_rho,
        applicable: smoother_non_expansive && rho < 1.0 && m1 > 1.0 + EXPANSION_TOL,
    })
}

/// Scans scale factors for one at which the diagnostic (B, S̃, B) ordering
/// stops being SPD. Returns the first failing σ, or `None` when every σ in
/// the list passes the SPD check.
pub fn find_wrong_order_witness(
    s: &Arc<dyn LinearOperator>,
    b: &Arc<dyn LinearOperator>,
    a: &Arc<SparseMatrix>,
    sigmas: &[f64],
) -> Result<Option<WrongOrderWitness>> {
    for &sigma in sigmas {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wrong-order scan requires positive finite scale factors, got {sigma}"
            )));
        }
        let scaled: Arc<dyn LinearOperator> =
            Arc::new(ScaledOperator::new(Arc::clone(b), sigma));
        let diag = CombinedPreconditioner::new(
            Arc::clone(a),
            Arc::clone(s),
            scaled,
            CombineMode::WrongOrderDiagnostic,
        )?;
        let report = certify_spd(&diag)?;
        if !report.spd {
            return Ok(Some(WrongOrderWitness { sigma, report }));
        }
    }
    Ok(None)
}

/// Exact solver wrapped as an operator: apply = A⁻¹ via dense Cholesky.
///
/// The B = A⁻¹ reference point for certificates and the exact-preconditioner
/// path in solver tests.
pub struct DenseCholeskySolver {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    n: usize,
}

impl DenseCholeskySolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidStructure(
                "dense Cholesky requires a square matrix".into(),
            ));
        }
        dense_guard(a.n_rows())?;
        let dense = a.to_dense()?.to_nalgebra();
        let chol = dense.cholesky().ok_or_else(|| {
            Error::InvalidStructure("dense Cholesky failed: matrix not positive definite".into())
        })?;
        Ok(Self { chol, n: a.n_rows() })
    }
}

impl LinearOperator for DenseCholeskySolver {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn n_cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "dense Cholesky solve",
                expected: self.n,
                found: x.len(),
            });
        }
        let rhs = nalgebra::DVector::from_column_slice(x);
        Ok(self.chol.solve(&rhs).as_slice().to_vec())
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        self.apply(x)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}
