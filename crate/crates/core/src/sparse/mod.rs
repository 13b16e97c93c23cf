//! Sparse and dense matrix storage plus the vector kernels everything else
//! builds on.
//!
//! Matrices are compressed sparse row (CSR) with sorted column indices within
//! each row; every algorithm in the crate relies on that canonical form, so it
//! is enforced at construction and never re-checked in kernels. Symmetric
//! matrices are stored in full (both triangles), with symmetry asserted rather
//! than halved.
//!
//! [`DenseMatrix`] exists for oracle work at desk scale: assembling operators
//! column by column, checking identities entrywise, and feeding eigensolvers.
//! It refuses dimensions above [`MAX_DENSE_DIM`].

pub mod io;

use crate::error::{Error, Result};

/// Hard cap for dense oracle computations.
pub const MAX_DENSE_DIM: usize = 2048;

/// Dense vectors are plain slices of `f64`; owned form.
pub type Vector = Vec<f64>;

/// Declared symmetry of a [`SparseMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Symmetry {
    General,
    /// Full storage with the invariant that every stored `(i, j)` has a stored
    /// `(j, i)` holding the identical value.
    Symmetric,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed; columns are sorted within each row.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        symmetry: Symmetry,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("matrix construction"));
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in &mut rows {
            // Stable, so duplicates accumulate in insertion order and the
            // result is reproducible bit for bit.
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_offsets.push(col_indices.len());
        }
        let m = Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetry,
        };
        if symmetry == Symmetry::Symmetric {
            m.check_symmetric()?;
        }
        Ok(m)
    }

    /// Wraps raw CSR arrays, validating the canonical-form invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets length {} != n_rows + 1 = {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0
            || *row_offsets.last().unwrap() != col_indices.len()
            || col_indices.len() != values.len()
        {
            return Err(Error::InvalidStructure(
                "row_offsets endpoints disagree with index/value lengths".into(),
            ));
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreasing at row {i}"
                )));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidStructure(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= n_cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {last} out of range in row {i}"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        let m = Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetry,
        };
        if symmetry == Symmetry::Symmetric {
            m.check_symmetric()?;
        }
        Ok(m)
    }

    /// Identity matrix, flagged symmetric.
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetry: Symmetry::Symmetric,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored entry at `(i, j)`, or 0 if the position is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// The diagonal as a vector; absent diagonal entries read as 0.
    pub fn diagonal(&self) -> Vector {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Verifies that every stored `(i, j)` has a stored `(j, i)` with the
    /// identical value.
    fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSymmetric("matrix is not square".into()));
        }
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if self.get(j, i) != v {
                    return Err(Error::NotSymmetric(format!(
                        "entry ({i}, {j}) = {v} but ({j}, {i}) = {}",
                        self.get(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Re-checks stored symmetry and upgrades the flag. Useful after reading a
    /// `general` file that is symmetric in fact.
    pub fn into_symmetric(mut self) -> Result<Self> {
        self.symmetry = Symmetry::Symmetric;
        self.check_symmetric()?;
        Ok(self)
    }

    /// Sparse matrix-vector product `y = A x`. Accumulation order within each
    /// row is fixed left to right.
    pub fn spmv(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
        Ok(y)
    }

    /// Transposed product `y = Aᵀ x` without forming the transpose.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "spmv_transpose",
                expected: self.n_rows,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    /// Explicit transpose in canonical CSR form.
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols];
        for &j in &self.col_indices {
            counts[j] += 1;
        }
        let mut row_offsets = Vec::with_capacity(self.n_cols + 1);
        row_offsets.push(0);
        for c in &counts {
            row_offsets.push(row_offsets.last().unwrap() + c);
        }
        let mut next = row_offsets[..self.n_cols].to_vec();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = next[j];
                col_indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        // Rows come out sorted because source rows are visited in order.
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
            symmetry: self.symmetry,
        }
    }

    /// Sparse product `C = A B` via row-wise accumulation.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "sparse multiply",
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut accum = vec![0.0; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut active: Vec<usize> = Vec::new();
        for i in 0..self.n_rows {
            active.clear();
            let (a_cols, a_vals) = self.row(i);
            for (&k, &av) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &bv) in b_cols.iter().zip(b_vals) {
                    if marker[j] != i {
                        marker[j] = i;
                        accum[j] = 0.0;
                        active.push(j);
                    }
                    accum[j] += av * bv;
                }
            }
            active.sort_unstable();
            for &j in &active {
                col_indices.push(j);
                values.push(accum[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_offsets,
            col_indices,
            values,
            symmetry: Symmetry::General,
        })
    }

    /// Averages the matrix with its transpose and flags it symmetric, after
    /// asserting the asymmetry stays under `tol`. Used for Galerkin products
    /// whose exact symmetry is lost to rounding.
    pub fn symmetrized(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSymmetric("matrix is not square".into()));
        }
        let t = self.transpose();
        let mut triplets = Vec::with_capacity(self.nnz());
        let mut max_asym = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let vt = t.get(i, j);
                max_asym = max_asym.max((v - vt).abs());
                triplets.push((i, j, 0.5 * (v + vt)));
            }
            // Positions present only in the transpose.
            let (tcols, tvals) = t.row(i);
            for (&j, &vt) in tcols.iter().zip(tvals) {
                if self.get(i, j) == 0.0 && !cols.contains(&j) {
                    max_asym = max_asym.max(vt.abs());
                    triplets.push((i, j, 0.5 * vt));
                }
            }
        }
        if max_asym > tol {
            return Err(Error::NotSymmetric(format!(
                "asymmetry {max_asym:.3e} exceeds tolerance {tol:.3e}"
            )));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &triplets, Symmetry::Symmetric)
    }

    /// Dense copy, guarded at [`MAX_DENSE_DIM`].
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols)?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        Ok(d)
    }

    /// Sparsifies a dense matrix, dropping exact zeros.
    pub fn from_dense(d: &DenseMatrix, symmetry: Symmetry) -> Result<Self> {
        let mut triplets = Vec::new();
        for i in 0..d.n_rows() {
            for j in 0..d.n_cols() {
                let v = d.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.n_rows(), d.n_cols(), &triplets, symmetry)
    }
}

/// Row-major dense matrix for oracle computations, capped at
/// [`MAX_DENSE_DIM`] per side.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self> {
        let max = n_rows.max(n_cols);
        if max > MAX_DENSE_DIM {
            return Err(Error::DenseGuard {
                n: max,
                max: MAX_DENSE_DIM,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries: vec![0.0; n_rows * n_cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    /// Builds from rows given as slices; all rows must share a length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(n_rows, n_cols)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidStructure("ragged rows".into()));
            }
            m.entries[i * n_cols..(i + 1) * n_cols].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n_cols + j] = v;
    }

    /// Writes `col` into column `j`.
    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.n_rows);
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "dense matmul",
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols)?;
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out.entries[i * out.n_cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.n_cols, self.n_rows).expect("within guard");
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "dense mul_vec",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        Ok((0..self.n_rows)
            .map(|i| {
                (0..self.n_cols)
                    .map(|j| self.get(i, j) * x[j])
                    .sum::<f64>()
            })
            .collect())
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                context: "dense sub",
                expected: self.n_rows,
                found: other.n_rows,
            });
        }
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a -= b;
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute deviation from symmetry, `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols);
        let mut m = 0.0f64;
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows, self.n_cols, |i, j| self.get(i, j))
    }
}

/// Euclidean inner product.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "dot",
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Returns `alpha * x + y`.
pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Result<Vector> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "axpy",
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| alpha * a + b).collect())
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
