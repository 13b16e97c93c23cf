//! Shared fixtures and reference implementations for the integration suite.
//!
//! The factorization and eigenvalue oracles here are written independently of
//! the library code paths they judge: dense arrays, textbook loops, no shared
//! helpers. When a test compares the sparse kernels against these, agreement
//! means two implementations derived separately from the same definitions
//! coincide, not that one function equals itself.

#![allow(dead_code)]
// Textbook loops are the point of these references.
#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use copre::operator::LinearOperator;
use copre::sparse::{DenseMatrix, SparseMatrix, Symmetry, Vector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Sentinel for "no fill level assigned yet".
pub const NO_LEVEL: usize = usize::MAX;

// ---------------------------------------------------------------------------
// Matrix generators
// ---------------------------------------------------------------------------

/// tridiag(-1, 2, -1), the 1D Dirichlet Laplacian with unit spacing.
pub fn tridiag(n: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, &t, Symmetry::Symmetric).unwrap()
}

/// Five-point 2D Dirichlet Laplacian on an nx-by-ny grid, unit spacing.
pub fn laplacian_2d(nx: usize, ny: usize) -> SparseMatrix {
    let n = nx * ny;
    let idx = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let row = idx(i, j);
            t.push((row, row, 4.0));
            if i + 1 < nx {
                t.push((row, idx(i + 1, j), -1.0));
                t.push((idx(i + 1, j), row, -1.0));
            }
            if j + 1 < ny {
                t.push((row, idx(i, j + 1), -1.0));
                t.push((idx(i, j + 1), row, -1.0));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t, Symmetry::Symmetric).unwrap()
}

/// Dense SPD matrix with prescribed condition number: a logarithmically
/// spaced spectrum from 1 to `cond`, conjugated by random Householder
/// reflections, then symmetrized entrywise to remove conjugation roundoff.
pub fn random_spd_dense(n: usize, cond: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    assert!(n >= 1 && cond >= 1.0);
    let mut a = DenseMatrix::zeros(n, n).unwrap();
    for i in 0..n {
        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        a.set(i, i, cond.powf(t));
    }
    for _ in 0..3 {
        // H = I - 2vv^T for a random unit v; A <- H A H keeps the spectrum.
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let mut h = DenseMatrix::identity(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                h.set(i, j, h.get(i, j) - 2.0 * v[i] * v[j]);
            }
        }
        a = h.matmul(&a).unwrap().matmul(&h).unwrap();
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, m);
            a.set(j, i, m);
        }
    }
    a
}

/// Sparse version of [`random_spd_dense`], tagged symmetric.
pub fn random_spd(n: usize, cond: f64, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SparseMatrix::from_dense(&random_spd_dense(n, cond, &mut rng), Symmetry::Symmetric).unwrap()
}

/// Random sparse symmetric diagonally dominant matrix: strictly positive
/// diagonal exceeding the absolute row sum, hence SPD, with roughly
/// `extra_per_row` off-diagonal pairs per row.
pub fn random_sparse_spd(n: usize, extra_per_row: usize, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut row_abs = vec![0.0f64; n];
    for i in 0..n {
        for _ in 0..extra_per_row {
            let j = rng.random_range(0..n);
            if j == i {
                continue;
            }
            let v = -(rng.random::<f64>() + 0.1);
            t.push((i, j, v));
            t.push((j, i, v));
            row_abs[i] += v.abs();
            row_abs[j] += v.abs();
        }
    }
    // Duplicates sum inside from_triplets; row_abs already counted each copy.
    for (i, &s) in row_abs.iter().enumerate() {
        t.push((i, i, s + 1.0 + rng.random::<f64>()));
    }
    SparseMatrix::from_triplets(n, n, &t, Symmetry::Symmetric).unwrap()
}

// ---------------------------------------------------------------------------
// Dense factorization oracles
// ---------------------------------------------------------------------------

/// Dense LU without pivoting, Doolittle form: returns (unit-lower L, upper U)
/// or `None` on a zero pivot.
pub fn dense_lu(a: &DenseMatrix) -> Option<(DenseMatrix, DenseMatrix)> {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols());
    let mut f = a.clone();
    for i in 0..n {
        for p in 0..i {
            let piv = f.get(p, p);
            if piv == 0.0 {
                return None;
            }
            let factor = f.get(i, p) / piv;
            f.set(i, p, factor);
            for j in (p + 1)..n {
                f.set(i, j, f.get(i, j) - factor * f.get(p, j));
            }
        }
    }
    if (0..n).any(|i| f.get(i, i) == 0.0) {
        return None;
    }
    let mut l = DenseMatrix::identity(n).unwrap();
    let mut u = DenseMatrix::zeros(n, n).unwrap();
    for i in 0..n {
        for j in 0..i {
            l.set(i, j, f.get(i, j));
        }
        for j in i..n {
            u.set(i, j, f.get(i, j));
        }
    }
    Some((l, u))
}

/// Dense Cholesky, lower triangular L with A = L·Lᵀ, or `None` when a pivot
/// is not positive.
pub fn dense_cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols());
    let mut l = DenseMatrix::zeros(n, n).unwrap();
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for q in 0..j {
                s -= l.get(i, q) * l.get(j, q);
            }
            if j < i {
                l.set(i, j, s / l.get(j, j));
            } else {
                if s <= 0.0 {
                    return None;
                }
                l.set(i, i, s.sqrt());
            }
        }
    }
    Some(l)
}

/// Fill levels from symbolic Gaussian elimination in natural order, run
/// densely: level 0 at structural nonzeros and the diagonal, fill level
/// min(old, lev(i,p) + lev(p,j) + 1), positions above `k` dropped at the end
/// of each row (and such pivots skipped).
pub fn dense_levels(a: &SparseMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = a.n_rows();
    let mut lev = vec![vec![NO_LEVEL; n]; n];
    for i in 0..n {
        lev[i][i] = 0;
        let (cols, _) = a.row(i);
        for &j in cols {
            lev[i][j] = 0;
        }
    }
    for i in 0..n {
        for p in 0..i {
            if lev[i][p] > k {
                continue;
            }
            for j in (p + 1)..n {
                if lev[p][j] > k {
                    continue;
                }
                let cand = lev[i][p].saturating_add(lev[p][j]).saturating_add(1);
                if cand < lev[i][j] {
                    lev[i][j] = cand;
                }
            }
        }
        for j in 0..n {
            if lev[i][j] > k {
                lev[i][j] = NO_LEVEL;
            }
        }
    }
    lev
}

/// One-pass dense ILU(k) with interleaved level tracking and end-of-row
/// dropping: the classical formulation the sparse two-phase implementation
/// must reproduce. Returns the in-place factor (L strictly below the
/// diagonal with implicit unit diagonal, U on and above) or `None` on a zero
/// pivot among retained positions.
pub fn dense_ilu_oracle(a: &SparseMatrix, k: usize) -> Option<DenseMatrix> {
    let n = a.n_rows();
    let mut lev = vec![vec![NO_LEVEL; n]; n];
    for i in 0..n {
        lev[i][i] = 0;
        let (cols, _) = a.row(i);
        for &j in cols {
            lev[i][j] = 0;
        }
    }
    let mut f = a.to_dense().unwrap();
    for i in 0..n {
        for p in 0..i {
            if lev[i][p] > k {
                continue;
            }
            let piv = f.get(p, p);
            if piv == 0.0 {
                return None;
            }
            let factor = f.get(i, p) / piv;
            f.set(i, p, factor);
            for j in (p + 1)..n {
                // Row p was already dropped to its pattern, so positions of
                // row p beyond level k hold zero and contribute nothing.
                if lev[p][j] > k {
                    continue;
                }
                f.set(i, j, f.get(i, j) - factor * f.get(p, j));
                let cand = lev[i][p].saturating_add(lev[p][j]).saturating_add(1);
                if cand < lev[i][j] {
                    lev[i][j] = cand;
                }
            }
        }
        for j in 0..n {
            if lev[i][j] > k {
                f.set(i, j, 0.0);
            }
        }
        if f.get(i, i) == 0.0 {
            return None;
        }
    }
    Some(f)
}

/// Restricted dense Cholesky on the level-k pattern: the IC(k) reference.
pub enum IcOracle {
    Factor(DenseMatrix),
    Breakdown { row: usize, pivot: f64 },
}

pub fn dense_ic_oracle(a: &SparseMatrix, k: usize) -> IcOracle {
    let n = a.n_rows();
    let lev = dense_levels(a, k);
    let retained = |i: usize, j: usize| lev[i][j] != NO_LEVEL;
    let mut l = DenseMatrix::zeros(n, n).unwrap();
    for i in 0..n {
        for j in 0..=i {
            if !retained(i, j) {
                continue;
            }
            let mut s = a.get(i, j);
            for q in 0..j {
                if retained(i, q) && retained(j, q) {
                    s -= l.get(i, q) * l.get(j, q);
                }
            }
            if j < i {
                l.set(i, j, s / l.get(j, j));
            } else {
                if s <= 0.0 {
                    return IcOracle::Breakdown { row: i, pivot: s };
                }
                l.set(i, i, s.sqrt());
            }
        }
    }
    IcOracle::Factor(l)
}

// ---------------------------------------------------------------------------
// Spectral oracles
// ---------------------------------------------------------------------------

/// ρ = ‖I − SA‖²_A by power iteration on E = (I − SᵀA)(I − SA) with
/// A-inner-product Rayleigh quotients. E is self-adjoint and positive
/// semidefinite in that inner product, so the quotient climbs to λ_max = ρ.
pub fn rho_power_oracle(
    s: &dyn LinearOperator,
    a: &SparseMatrix,
    iters: usize,
    seed: u64,
) -> f64 {
    let n = a.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vector = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let apply_e = |v: &[f64]| -> Vector {
        // u = v - S(Av); w = u - S^T(Au)
        let av = a.spmv(v).unwrap();
        let sav = s.apply(&av).unwrap();
        let u: Vector = v.iter().zip(&sav).map(|(x, y)| x - y).collect();
        let au = a.spmv(&u).unwrap();
        let stau = s.apply_transpose(&au).unwrap();
        u.iter().zip(&stau).map(|(x, y)| x - y).collect()
    };
    let a_dot = |x: &[f64], y: &[f64]| -> f64 {
        let ay = a.spmv(y).unwrap();
        x.iter().zip(&ay).map(|(p, q)| p * q).sum()
    };
    let mut rho = 0.0;
    for _ in 0..iters {
        let w = apply_e(&v);
        let denom = a_dot(&v, &v);
        if denom <= 0.0 {
            break;
        }
        rho = a_dot(&w, &v) / denom;
        let norm = a_dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / norm).collect();
    }
    rho
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Columns of `op` probed with coordinate basis vectors; deliberately not the
/// library's own assembler.
pub fn assemble_columns(op: &dyn LinearOperator) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(op.n_rows(), op.n_cols()).unwrap();
    let mut e = vec![0.0; op.n_cols()];
    for j in 0..op.n_cols() {
        e[j] = 1.0;
        m.set_column(j, &op.apply(&e).unwrap());
        e[j] = 0.0;
    }
    m
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

pub fn dense_max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.n_rows(), b.n_rows());
    assert_eq!(a.n_cols(), b.n_cols());
    let mut m = 0.0f64;
    for i in 0..a.n_rows() {
        for j in 0..a.n_cols() {
            m = m.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    m
}

/// Residual b − A·x in the max norm.
pub fn residual_inf(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    max_abs_diff(&ax, b)
}

/// An operator made from a dense matrix with a declared adjoint flag, for
/// feeding assembled matrices back through operator-generic code.
pub struct DenseOperator {
    pub m: DenseMatrix,
    pub self_adjoint: bool,
}

impl LinearOperator for DenseOperator {
    fn n_rows(&self) -> usize {
        self.m.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.m.n_cols()
    }

    fn apply(&self, x: &[f64]) -> copre::Result<Vector> {
        self.m.mul_vec(x)
    }

    fn apply_transpose(&self, x: &[f64]) -> copre::Result<Vector> {
        let mut out = vec![0.0; self.m.n_cols()];
        for i in 0..self.m.n_rows() {
            for j in 0..self.m.n_cols() {
                out[j] += self.m.get(i, j) * x[i];
            }
        }
        Ok(out)
    }

    fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }
}

/// Convenience: sparse matrix shared for operator composition.
pub fn shared(a: SparseMatrix) -> Arc<SparseMatrix> {
    Arc::new(a)
}
