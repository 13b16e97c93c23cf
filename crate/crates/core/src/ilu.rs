//! Level-of-fill incomplete factorizations: ILU(k) and the SPD-preserving
//! incomplete Cholesky IC(k).
//!
//! The symbolic phase assigns every position a fill level — 0 for original
//! nonzeros and the diagonal, and `min(level, level_ik + level_kj + 1)` as
//! elimination generates fill — then drops positions whose level exceeds k at
//! the end of each row. Pivot entries whose own level exceeds k are skipped,
//! so retained values never depend on dropped positions. The numeric phase is
//! IKJ elimination restricted to the retained pattern, which makes the
//! residual A − LU vanish exactly on every retained position.
//!
//! Breakdown is loud: a zero pivot (ILU) or a nonpositive pivot (IC) aborts
//! factorization with the offending row. No silent diagonal shifting happens;
//! callers may pass an explicit shift to factor A + shift·I instead.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{SparseMatrix, Symmetry, Vector};

/// Which factorization a pattern feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorVariant {
    /// General L·U with unit lower-triangular L.
    Ilu,
    /// Incomplete Cholesky L·Lᵀ; requires a symmetric matrix and positive
    /// pivots.
    Ic,
}

/// The retained sparsity pattern of an incomplete factorization, with the
/// fill level of every retained position.
#[derive(Debug, Clone)]
pub struct FillLevelPattern {
    n: usize,
    k: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    levels: Vec<usize>,
}

impl FillLevelPattern {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fill_level(&self) -> usize {
        self.k
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Sorted columns and their levels for row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[usize]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.levels[lo..hi])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }
}

/// Symbolic factorization: runs level-tracking Gaussian elimination in
/// natural order and keeps positions with level ≤ k.
pub fn symbolic_factor(a: &SparseMatrix, k: usize) -> Result<FillLevelPattern> {
    if !a.is_square() {
        return Err(Error::InvalidStructure(
            "symbolic factorization requires a square matrix".into(),
        ));
    }
    let n = a.n_rows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut levels = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        // Working row: column → current level. Original nonzeros and the
        // diagonal start at level 0.
        let mut work: BTreeMap<usize, usize> = BTreeMap::new();
        let (cols, _) = a.row(i);
        for &j in cols {
            work.insert(j, 0);
        }
        work.insert(i, 0);
        // Eliminate with pivot columns in ascending order. Fill can insert new
        // pivot candidates ahead of the cursor; levels of a column are final
        // by the time the cursor reaches it because all its updates come from
        // smaller pivots.
        let mut cursor = 0usize;
        while let Some((&piv, &lev_ik)) = work.range(cursor..i).next() {
            cursor = piv + 1;
            if lev_ik > k {
                continue;
            }
            let lo = row_offsets[piv];
            let hi = row_offsets[piv + 1];
            let piv_cols = &col_indices[lo..hi];
            let piv_levels = &levels[lo..hi];
            let start = piv_cols.partition_point(|&j| j <= piv);
            for (&j, &lev_kj) in piv_cols[start..].iter().zip(&piv_levels[start..]) {
                let cand = lev_ik + lev_kj + 1;
                work.entry(j)
                    .and_modify(|l| *l = (*l).min(cand))
                    .or_insert(cand);
            }
        }
        for (&j, &lev) in &work {
            if lev <= k {
                col_indices.push(j);
                levels.push(lev);
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(FillLevelPattern {
        n,
        k,
        row_offsets,
        col_indices,
        levels,
    })
}

/// The computed factors, applied as the preconditioner B = U⁻¹L⁻¹
/// (equivalently L⁻ᵀL⁻¹ for IC).
#[derive(Debug, Clone)]
pub struct IncompleteFactorization {
    l: SparseMatrix,
    u: SparseMatrix,
    variant: FactorVariant,
    k: usize,
}

/// Numeric factorization on a precomputed pattern.
pub fn numeric_factor(
    a: &SparseMatrix,
    pattern: &FillLevelPattern,
    variant: FactorVariant,
) -> Result<IncompleteFactorization> {
    if !a.is_square() || a.n_rows() != pattern.n {
        return Err(Error::DimensionMismatch {
            context: "numeric factorization",
            expected: pattern.n,
            found: a.n_rows(),
        });
    }
    match variant {
        FactorVariant::Ilu => numeric_ilu(a, pattern),
        FactorVariant::Ic => numeric_ic(a, pattern),
    }
}

fn numeric_ilu(a: &SparseMatrix, pattern: &FillLevelPattern) -> Result<IncompleteFactorization> {
    let n = pattern.n;
    // Factor rows, stored aligned with the pattern: columns < i hold L
    // entries, columns ≥ i hold U entries.
    let mut values = vec![0.0; pattern.nnz()];
    for i in 0..n {
        let (pcols, _) = pattern.row(i);
        let lo = pattern.row_offsets[i];
        let row_values = {
            let (acols, avals) = a.row(i);
            let mut w = vec![0.0; pcols.len()];
            for (&j, &v) in acols.iter().zip(avals) {
                if let Ok(pos) = pcols.binary_search(&j) {
                    w[pos] = v;
                }
            }
            w
        };
        let mut w = row_values;
        let diag_pos = pcols
            .binary_search(&i)
            .expect("diagonal always retained at level 0");
        for (idx, &piv) in pcols[..diag_pos].iter().enumerate() {
            // Pivot row is final; its diagonal was checked nonzero when that
            // row completed.
            let (piv_pcols, _) = pattern.row(piv);
            let piv_lo = pattern.row_offsets[piv];
            let piv_diag_pos = piv_pcols.binary_search(&piv).expect("diagonal retained");
            let u_kk = values[piv_lo + piv_diag_pos];
            let l_ik = w[idx] / u_kk;
            w[idx] = l_ik;
            if l_ik == 0.0 {
                continue;
            }
            for t in (piv_diag_pos + 1)..piv_pcols.len() {
                let j = piv_pcols[t];
                if let Ok(pos) = pcols.binary_search(&j) {
                    w[pos] -= l_ik * values[piv_lo + t];
                }
            }
        }
        if w[diag_pos] == 0.0 {
            return Err(Error::ZeroPivot { row: i });
        }
        values[lo..lo + pcols.len()].copy_from_slice(&w);
    }
    // Split into unit-lower L (explicit 1.0 diagonal) and upper U.
    let mut l_triplets = Vec::new();
    let mut u_triplets = Vec::new();
    for i in 0..n {
        let (pcols, _) = pattern.row(i);
        let lo = pattern.row_offsets[i];
        for (idx, &j) in pcols.iter().enumerate() {
            let v = values[lo + idx];
            if j < i {
                l_triplets.push((i, j, v));
            } else {
                u_triplets.push((i, j, v));
            }
        }
        l_triplets.push((i, i, 1.0));
    }
    Ok(IncompleteFactorization {
        l: SparseMatrix::from_triplets(n, n, &l_triplets, Symmetry::General)?,
        u: SparseMatrix::from_triplets(n, n, &u_triplets, Symmetry::General)?,
        variant: FactorVariant::Ilu,
        k: pattern.k,
    })
}

fn numeric_ic(a: &SparseMatrix, pattern: &FillLevelPattern) -> Result<IncompleteFactorization> {
    if a.symmetry() != Symmetry::Symmetric {
        return Err(Error::NotSymmetric(
            "incomplete Cholesky requires a symmetric matrix".into(),
        ));
    }
    let n = pattern.n;
    // Build L row by row on the lower triangle of the pattern (which is
    // structurally symmetric for symmetric A, so the lower part suffices).
    // The diagonal is stored last in each row.
    let mut row_offsets = vec![0usize];
    let mut col_indices: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for i in 0..n {
        let (pcols, _) = pattern.row(i);
        let row_start = col_indices.len();
        for &j in pcols.iter().take_while(|&&j| j <= i) {
            if j < i {
                // l_ij = (a_ij − Σ_k l_ik l_jk) / l_jj over shared columns
                // k < j; row j is complete, row i's prefix holds columns < j.
                let mut s = a.get(i, j);
                let j_lo = row_offsets[j];
                let j_hi = row_offsets[j + 1];
                {
                    let i_cols = &col_indices[row_start..];
                    let i_vals = &values[row_start..];
                    let j_cols = &col_indices[j_lo..j_hi];
                    let j_vals = &values[j_lo..j_hi];
                    let (mut p, mut q) = (0usize, 0usize);
                    while p < i_cols.len() && q < j_cols.len() && j_cols[q] < j {
                        match i_cols[p].cmp(&j_cols[q]) {
                            std::cmp::Ordering::Less => p += 1,
                            std::cmp::Ordering::Greater => q += 1,
                            std::cmp::Ordering::Equal => {
                                s -= i_vals[p] * j_vals[q];
                                p += 1;
                                q += 1;
                            }
                        }
                    }
                }
                let l_jj = values[j_hi - 1];
                col_indices.push(j);
                values.push(s / l_jj);
            } else {
                let mut pivot = a.get(i, i);
                for &v in &values[row_start..] {
                    pivot -= v * v;
                }
                if pivot <= 0.0 {
                    return Err(Error::IcBreakdown { row: i, pivot });
                }
                col_indices.push(i);
                values.push(pivot.sqrt());
            }
        }
        row_offsets.push(col_indices.len());
    }
    let l = SparseMatrix::from_csr(n, n, row_offsets, col_indices, values, Symmetry::General)?;
    let u = l.transpose();
    Ok(IncompleteFactorization {
        l,
        u,
        variant: FactorVariant::Ic,
        k: pattern.k,
    })
}

impl IncompleteFactorization {
    /// Symbolic + numeric factorization of `A + shift·I` in one call.
    pub fn factor(
        a: &SparseMatrix,
        k: usize,
        variant: FactorVariant,
        shift: f64,
    ) -> Result<Self> {
        if shift == 0.0 {
            let pattern = symbolic_factor(a, k)?;
            return numeric_factor(a, &pattern, variant);
        }
        let mut triplets = Vec::with_capacity(a.nnz() + a.n_rows());
        for i in 0..a.n_rows() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triplets.push((i, j, v));
            }
            triplets.push((i, i, shift));
        }
        let shifted =
            SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), &triplets, a.symmetry())?;
        let pattern = symbolic_factor(&shifted, k)?;
        numeric_factor(&shifted, &pattern, variant)
    }

    pub fn variant(&self) -> FactorVariant {
        self.variant
    }

    pub fn fill_level(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> &SparseMatrix {
        &self.l
    }

    pub fn u(&self) -> &SparseMatrix {
        &self.u
    }

    /// The preconditioner action B·r = U⁻¹ L⁻¹ r.
    pub fn apply(&self, r: &[f64]) -> Result<Vector> {
        if r.len() != self.l.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "factorization apply",
                expected: self.l.n_rows(),
                found: r.len(),
            });
        }
        let y = solve_lower(&self.l, r);
        Ok(solve_upper(&self.u, &y))
    }

    /// The transposed action Bᵀ·r = L⁻ᵀ U⁻ᵀ r; equal to `apply` for IC.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vector> {
        if r.len() != self.l.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "factorization apply_transpose",
                expected: self.l.n_rows(),
                found: r.len(),
            });
        }
        if self.variant == FactorVariant::Ic {
            return self.apply(r);
        }
        let y = solve_upper_transpose(&self.u, r);
        Ok(solve_lower_transpose(&self.l, &y))
    }
}

impl LinearOperator for IncompleteFactorization {
    fn n_rows(&self) -> usize {
        self.l.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.l.n_rows()
    }

    fn apply(&self, x: &[f64]) -> Result<Vector> {
        IncompleteFactorization::apply(self, x)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vector> {
        IncompleteFactorization::apply_transpose(self, x)
    }

    fn is_self_adjoint(&self) -> bool {
        self.variant == FactorVariant::Ic
    }
}

/// Forward substitution `M x = r` for lower-triangular CSR with stored
/// diagonal.
fn solve_lower(m: &SparseMatrix, r: &[f64]) -> Vector {
    let n = m.n_rows();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = m.row(i);
        let mut acc = r[i];
        let mut diag = 1.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                acc -= v * x[j];
            } else {
                diag = v;
            }
        }
        x[i] = acc / diag;
    }
    x
}

/// Backward substitution `M x = r` for upper-triangular CSR with stored
/// diagonal.
fn solve_upper(m: &SparseMatrix, r: &[f64]) -> Vector {
    let n = m.n_rows();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let (cols, vals) = m.row(i);
        let mut acc = r[i];
        let mut diag = 1.0;
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

/// Solves `Mᵀ x = r` where M is lower-triangular CSR, by scattering rows in
/// reverse order.
fn solve_lower_transpose(m: &SparseMatrix, r: &[f64]) -> Vector {
    let n = m.n_rows();
    let mut t = r.to_vec();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = t[i] / m.get(i, i);
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                t[j] -= v * x[i];
            }
        }
    }
    x
}

/// Solves `Mᵀ x = r` where M is upper-triangular CSR, by scattering rows in
/// forward order.
fn solve_upper_transpose(m: &SparseMatrix, r: &[f64]) -> Vector {
    let n = m.n_rows();
    let mut t = r.to_vec();
    let mut x = vec![0.0; n];
    for i in 0..n {
        x[i] = t[i] / m.get(i, i);
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i {
                t[j] -= v * x[i];
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn tridiag(n: usize) -> SparseMatrix {
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

    fn identity(n: usize) -> SparseMatrix {
        SparseMatrix::identity(n)
    }

    #[test]
    fn tridiagonal_pattern_has_no_fill() {
        let a = tridiag(6);
        for k in [0, 1, 5] {
            let p = symbolic_factor(&a, k).unwrap();
            assert_eq!(p.nnz(), a.nnz(), "k={k}");
            for i in 0..6 {
                let (cols, levels) = p.row(i);
                let (acols, _) = a.row(i);
                assert_eq!(cols, acols);
                assert!(levels.iter().all(|&l| l == 0));
            }
        }
    }

    #[test]
    fn level_zero_pattern_equals_matrix_pattern() {
        // 5-point stencil on a 4×4 grid.
        let n = 16;
        let mut t = Vec::new();
        for y in 0..4usize {
            for x in 0..4usize {
                let i = y * 4 + x;
                t.push((i, i, 4.0));
                if x + 1 < 4 {
                    t.push((i, i + 1, -1.0));
                    t.push((i + 1, i, -1.0));
                }
                if y + 1 < 4 {
                    t.push((i, i + 4, -1.0));
                    t.push((i + 4, i, -1.0));
                }
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t, Symmetry::Symmetric).unwrap();
        let p = symbolic_factor(&a, 0).unwrap();
        assert_eq!(p.nnz(), a.nnz());
        let p1 = symbolic_factor(&a, 1).unwrap();
        assert!(p1.nnz() > p.nnz());
        // Monotone growth of retained positions with k.
        for i in 0..n {
            let (c0, _) = p.row(i);
            let (c1, _) = p1.row(i);
            for j in c0 {
                assert!(c1.contains(j));
            }
        }
    }

    #[test]
    fn identity_factors_to_identity() {
        let a = identity(5);
        let f = IncompleteFactorization::factor(&a, 0, FactorVariant::Ilu, 0.0).unwrap();
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(f.apply(&r).unwrap(), r.to_vec());
        let fc = IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 0.0).unwrap();
        assert_eq!(fc.apply(&r).unwrap(), r.to_vec());
    }

    #[test]
    fn tridiagonal_ic0_is_exact_cholesky() {
        let a = tridiag(3);
        let f = IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 0.0).unwrap();
        let expect = [2.0_f64.sqrt(), (3.0_f64 / 2.0).sqrt(), (4.0_f64 / 3.0).sqrt()];
        for (i, &e) in expect.iter().enumerate() {
            assert!((f.l().get(i, i) - e).abs() < 1e-15, "diag {i}");
        }
        // Exact factorization means apply is the exact inverse.
        let x = f.apply(&[1.0, 0.0, 0.0]).unwrap();
        for (got, want) in x.iter().zip(&[0.75, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn ic_requires_symmetric_flag() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 2.0)], Symmetry::General)
            .unwrap();
        assert!(matches!(
            IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 0.0),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn ic_breakdown_reports_row_and_pivot() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
            Symmetry::Symmetric,
        )
        .unwrap();
        match IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 0.0) {
            Err(Error::IcBreakdown { row, pivot }) => {
                assert_eq!(row, 1);
                assert!((pivot - (-3.0)).abs() < 1e-15);
            }
            other => panic!("expected breakdown, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn zero_pivot_reports_row() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 1, 1.0), (1, 0, 1.0)],
            Symmetry::Symmetric,
        )
        .unwrap();
        assert!(matches!(
            IncompleteFactorization::factor(&a, 0, FactorVariant::Ilu, 0.0),
            Err(Error::ZeroPivot { row: 0 })
        ));
    }

    #[test]
    fn shift_rescues_breakdown() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
            Symmetry::Symmetric,
        )
        .unwrap();
        assert!(IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 4.0).is_ok());
    }

    #[test]
    fn ilu_transpose_is_exact_adjoint() {
        // Nonsymmetric diagonally dominant matrix.
        let a = SparseMatrix::from_triplets(
            4,
            4,
            &[
                (0, 0, 4.0),
                (0, 1, -1.0),
                (1, 0, -2.0),
                (1, 1, 5.0),
                (1, 2, -1.0),
                (2, 2, 4.0),
                (2, 3, -1.5),
                (3, 1, -0.5),
                (3, 3, 3.0),
            ],
            Symmetry::General,
        )
        .unwrap();
        let f = IncompleteFactorization::factor(&a, 1, FactorVariant::Ilu, 0.0).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.25, 1.0, -1.0, 2.0];
        let lhs = crate::sparse::dot(&f.apply(&x).unwrap(), &y).unwrap();
        let rhs = crate::sparse::dot(&x, &f.apply_transpose(&y).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn ic_apply_is_self_adjoint_operator() {
        let a = Arc::new(tridiag(8));
        let f = IncompleteFactorization::factor(&a, 0, FactorVariant::Ic, 0.0).unwrap();
        assert!(f.is_self_adjoint());
        let x = [1.0, 0.0, 2.0, -1.0, 0.5, 0.0, 1.0, -2.0];
        let y = [0.0, 1.0, -1.0, 2.0, 0.25, 1.5, -0.5, 1.0];
        let lhs = crate::sparse::dot(&f.apply(&x).unwrap(), &y).unwrap();
        let rhs = crate::sparse::dot(&x, &f.apply(&y).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
    }
}
