//! Classical algebraic multigrid: strength-based coarsening, Galerkin coarse
//! operators, and a symmetric V-cycle.
//!
//! The cycle pre-smooths with S and post-smooths with Sᵀ, so one application
//! from a zero guess is a self-adjoint operator; that is what lets the
//! hierarchy serve as the smoother slot of the combined preconditioner and as
//! a standalone PCG preconditioner.

mod coarsen;

pub use coarsen::{interpolation, split, strength, CfLabel, CfSplitting, StrengthGraph};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilu::{FactorVariant, IncompleteFactorization};
use crate::operator::LinearOperator;
use crate::smoothers::{Smoother, SmootherKind};
use crate::sparse::{SparseMatrix, Symmetry, Vector, MAX_DENSE_DIM};

/// Smoother choice for the finest level; coarser levels always use one
/// forward Gauss-Seidel sweep (transposed for post-smoothing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinestSmoother {
    GaussSeidel,
    /// Incomplete Cholesky with the given fill level. Symmetric but not
    /// guaranteed non-expansive; the resulting cycle can lose positive
    /// definiteness, which PCG reports as indefiniteness.
    Ic { level: usize },
    /// True ILU with the given fill level; transposed on the post-sweep so
    /// the cycle operator stays symmetric.
    Ilu { level: usize },
}

/// Setup and cycling parameters.
#[derive(Debug, Clone, Copy)]
pub struct AmgParams {
    /// Strength threshold in (0, 1).
    pub theta: f64,
    /// Stop coarsening at or below this size and solve densely.
    pub coarse_cap: usize,
    /// Hard cap on the number of levels.
    pub max_levels: usize,
    /// Stop when a coarse grid keeps more than this fraction of its fine
    /// grid.
    pub stagnation: f64,
    /// V-cycles per operator application.
    pub cycles: usize,
    pub finest_smoother: FinestSmoother,
}

impl Default for AmgParams {
    fn default() -> Self {
        Self {
            theta: 0.25,
            coarse_cap: 50,
            max_levels: 20,
            stagnation: 0.9,
            cycles: 1,
            finest_smoother: FinestSmoother::GaussSeidel,
        }
    }
}

struct Level {
    a: Arc<SparseMatrix>,
    /// Interpolation to the next coarser level, n_fine × n_coarse.
    p: SparseMatrix,
    smoother: Box<dyn LinearOperator>,
}

/// An immutable multigrid hierarchy; levels run finest to coarsest.
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarsest_a: Arc<SparseMatrix>,
    coarsest_solver: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    cycles: usize,
}

/// Per-level sizes for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStats {
    pub n: usize,
    pub nnz: usize,
}

/// Hierarchy shape summary; operator complexity is Σ nnz(A_l) / nnz(A_finest).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyStats {
    pub levels: Vec<LevelStats>,
    pub operator_complexity: f64,
}

fn level_smoother(a: &Arc<SparseMatrix>, choice: FinestSmoother) -> Result<Box<dyn LinearOperator>> {
    Ok(match choice {
        FinestSmoother::GaussSeidel => Box::new(Smoother::new(
            SmootherKind::GaussSeidelForward,
            a.clone(),
            1,
        )?),
        FinestSmoother::Ic { level } => Box::new(IncompleteFactorization::factor(
            a,
            level,
            FactorVariant::Ic,
            0.0,
        )?),
        FinestSmoother::Ilu { level } => Box::new(IncompleteFactorization::factor(
            a,
            level,
            FactorVariant::Ilu,
            0.0,
        )?),
    })
}

/// Builds the hierarchy by recursive coarsening.
pub fn setup(a: Arc<SparseMatrix>, params: &AmgParams) -> Result<AmgHierarchy> {
    if !(0.0..1.0).contains(&params.theta) || params.theta == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "theta {} outside (0, 1)",
            params.theta
        )));
    }
    if params.max_levels == 0 || params.cycles == 0 || params.coarse_cap == 0 {
        return Err(Error::InvalidParameter(
            "max_levels, cycles, and coarse_cap must be at least 1".into(),
        ));
    }
    if !(params.stagnation > 0.0 && params.stagnation <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stagnation {} outside (0, 1]",
            params.stagnation
        )));
    }
    if a.symmetry() != Symmetry::Symmetric {
        return Err(Error::NotSymmetric(
            "multigrid setup requires a symmetric matrix".into(),
        ));
    }
    for i in 0..a.n_rows() {
        if a.get(i, i) <= 0.0 {
            return Err(Error::AmgSetup(format!("nonpositive diagonal at row {i}")));
        }
    }

    let mut levels: Vec<Level> = Vec::new();
    let mut current = a;
    loop {
        let n = current.n_rows();
        // levels.len() counts built (non-coarsest) levels; adding the
        // coarsest keeps the total within max_levels.
        if n <= params.coarse_cap || levels.len() + 1 >= params.max_levels {
            break;
        }
        let graph = strength(&current, params.theta)?;
        let splitting = split(&graph);
        let nc = splitting.n_coarse();
        if nc == 0 || nc >= n || (nc as f64) > params.stagnation * (n as f64) {
            break;
        }
        let p = interpolation(&current, &graph, &splitting)?;
        let ap = current.multiply(&p)?;
        let raw = p.transpose().multiply(&ap)?;
        let scale = raw.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let coarse = raw.symmetrized(1e-10 * scale.max(1.0)).map_err(|e| {
            Error::AmgSetup(format!("Galerkin product lost symmetry: {e}"))
        })?;
        let choice = if levels.is_empty() {
            params.finest_smoother
        } else {
            FinestSmoother::GaussSeidel
        };
        let smoother = level_smoother(&current, choice)?;
        levels.push(Level {
            a: current,
            p,
            smoother,
        });
        current = Arc::new(coarse);
    }
    if current.n_rows() > MAX_DENSE_DIM {
        return Err(Error::AmgSetup(format!(
            "coarsening stalled at {} unknowns, beyond the dense solver guard {}",
            current.n_rows(),
            MAX_DENSE_DIM
        )));
    }
    let dense = current.to_dense()?.to_nalgebra();
    let coarsest_solver = dense.cholesky().ok_or_else(|| {
        Error::AmgSetup("coarsest operator is not positive definite".into())
    })?;
    Ok(AmgHierarchy {
        levels,
        coarsest_a: current,
        coarsest_solver,
        cycles: params.cycles,
    })
}

impl AmgHierarchy {
    /// Unknowns on the finest level.
    pub fn n(&self) -> usize {
        self.levels
            .first()
            .map_or(self.coarsest_a.n_rows(), |l| l.a.n_rows())
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// The operator on level `l` (0 = finest).
    pub fn level_matrix(&self, l: usize) -> &SparseMatrix {
        if l < self.levels.len() {
            &self.levels[l].a
        } else {
            &self.coarsest_a
        }
    }

    /// Interpolation from level `l+1` to level `l`, when `l` is not coarsest.
    pub fn level_interpolation(&self, l: usize) -> Option<&SparseMatrix> {
        self.levels.get(l).map(|lev| &lev.p)
    }

    pub fn stats(&self) -> HierarchyStats {
        let mut levels: Vec<LevelStats> = self
            .levels
            .iter()
            .map(|l| LevelStats {
                n: l.a.n_rows(),
                nnz: l.a.nnz(),
            })
            .collect();
        levels.push(LevelStats {
            n: self.coarsest_a.n_rows(),
            nnz: self.coarsest_a.nnz(),
        });
        let finest_nnz = levels[0].nnz.max(1);
        let total: usize = levels.iter().map(|l| l.nnz).sum();
        HierarchyStats {
            levels,
            operator_complexity: total as f64 / finest_nnz as f64,
        }
    }

    fn coarse_solve(&self, f: &[f64]) -> Vector {
        let rhs = nalgebra::DVector::from_column_slice(f);
        let x = self.coarsest_solver.solve(&rhs);
        x.as_slice().to_vec()
    }

    fn cycle_at(&self, l: usize, f: &[f64]) -> Result<Vector> {
        if l == self.levels.len() {
            return Ok(self.coarse_solve(f));
        }
        let level = &self.levels[l];
        // Pre-smooth from a zero guess.
        let mut x = level.smoother.apply(f)?;
        // Coarse correction of the current residual.
        let ax = level.a.spmv(&x)?;
        let r: Vector = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let rc = level.p.spmv_transpose(&r)?;
        let ec = self.cycle_at(l + 1, &rc)?;
        let pe = level.p.spmv(&ec)?;
        for (xi, pi) in x.iter_mut().zip(&pe) {
            *xi += pi;
        }
        // Post-smooth with the transpose, keeping the cycle self-adjoint.
        let ax = level.a.spmv(&x)?;
        let r: Vector = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let c = level.smoother.apply_transpose(&r)?;
        for (xi, ci) in x.iter_mut().zip(&c) {
            *xi += ci;
        }
        Ok(x)
    }

    /// One V-cycle from a zero initial guess.
    pub fn vcycle(&self, f: &[f64]) -> Result<Vector> {
        if f.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "vcycle",
                expected: self.n(),
                found: f.len(),
            });
        }
        self.cycle_at(0, f)
    }
}

impl LinearOperator for AmgHierarchy {
    fn n_rows(&self) -> usize {
        self.n()
    }

    fn n_cols(&self) -> usize {
        self.n()
    }

    /// `cycles` V-cycles composed on the updated residual.
    fn apply(&self, f: &[f64]) -> Result<Vector> {
        let mut x = self.vcycle(f)?;
        for _ in 1..self.cycles {
            let a = self.level_matrix(0);
            let ax = a.spmv(&x)?;
            let r: Vector = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let c = self.vcycle(&r)?;
            for (xi, ci) in x.iter_mut().zip(&c) {
                *xi += ci;
            }
        }
        Ok(x)
    }

    fn apply_transpose(&self, f: &[f64]) -> Result<Vector> {
        self.apply(f)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Arc<SparseMatrix> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Arc::new(SparseMatrix::from_triplets(n, n, &t, Symmetry::Symmetric).unwrap())
    }

    #[test]
    fn small_problem_is_single_level_exact_solve() {
        let a = laplacian_1d(10);
        let h = setup(a.clone(), &AmgParams::default()).unwrap();
        assert_eq!(h.num_levels(), 1);
        let f = vec![1.0; 10];
        let x = h.vcycle(&f).unwrap();
        let ax = a.spmv(&x).unwrap();
        for (got, want) in ax.iter().zip(&f) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn coarsening_builds_multiple_levels() {
        let a = laplacian_1d(63);
        let params = AmgParams {
            coarse_cap: 8,
            ..AmgParams::default()
        };
        let h = setup(a, &params).unwrap();
        assert!(h.num_levels() >= 2, "levels = {}", h.num_levels());
        for l in 0..h.num_levels() {
            assert_eq!(h.level_matrix(l).symmetry(), Symmetry::Symmetric);
        }
        let stats = h.stats();
        assert_eq!(stats.levels.len(), h.num_levels());
        assert!(stats.operator_complexity >= 1.0);
    }

    #[test]
    fn vcycle_reduces_error_monotonically_in_energy() {
        let a = laplacian_1d(63);
        let params = AmgParams {
            coarse_cap: 8,
            ..AmgParams::default()
        };
        let h = setup(a.clone(), &params).unwrap();
        // Solve A x = f by stationary iteration with the cycle.
        let f = vec![1.0; 63];
        let mut x = vec![0.0; 63];
        let mut previous = f64::INFINITY;
        for _ in 0..12 {
            let ax = a.spmv(&x).unwrap();
            let r: Vec<f64> = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let c = h.vcycle(&r).unwrap();
            for (xi, ci) in x.iter_mut().zip(&c) {
                *xi += ci;
            }
            let norm = crate::sparse::norm2(&r);
            assert!(norm < previous);
            previous = norm;
        }
        assert!(previous < 1e-6);
    }

    #[test]
    fn diagonal_matrix_terminates_with_direct_solve() {
        let t: Vec<_> = (0..12).map(|i| (i, i, (i + 1) as f64)).collect();
        let a = Arc::new(SparseMatrix::from_triplets(12, 12, &t, Symmetry::Symmetric).unwrap());
        let params = AmgParams {
            coarse_cap: 4,
            ..AmgParams::default()
        };
        let h = setup(a, &params).unwrap();
        // All points fine, no coarse set: the whole matrix becomes the
        // coarsest level.
        assert_eq!(h.num_levels(), 1);
        let f: Vec<f64> = (0..12).map(|i| (i + 1) as f64).collect();
        let x = h.vcycle(&f).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn setup_rejects_bad_inputs() {
        let a = laplacian_1d(8);
        let bad_theta = AmgParams {
            theta: 0.0,
            ..AmgParams::default()
        };
        assert!(setup(a.clone(), &bad_theta).is_err());
        let general = Arc::new(
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)], Symmetry::General)
                .unwrap(),
        );
        assert!(matches!(
            setup(general, &AmgParams::default()),
            Err(Error::NotSymmetric(_))
        ));
        let indefinite = Arc::new(
            SparseMatrix::from_triplets(
                2,
                2,
                &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
                Symmetry::Symmetric,
            )
            .unwrap(),
        );
        assert!(matches!(
            setup(indefinite, &AmgParams::default()),
            Err(Error::AmgSetup(_))
        ));
    }

    #[test]
    fn max_levels_cap_respected() {
        let a = laplacian_1d(255);
        let params = AmgParams {
            coarse_cap: 2,
            max_levels: 3,
            ..AmgParams::default()
        };
        let h = setup(a, &params).unwrap();
        assert!(h.num_levels() <= 3);
    }
}
