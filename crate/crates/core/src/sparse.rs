//! Compressed-column sparse matrices.
//!
//! Row indices are sorted within every column and duplicate triplets are
//! summed in a fixed order, so assembly is bit-reproducible.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};

use crate::error::{check_len, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SpMat {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    vals: Vec<f64>,
}

/// Triplet accumulator used during assembly.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols, "({i},{j}) out of bounds");
        self.entries.push((i, j, v));
    }

    /// Adds every entry of `a`, shifted by (`r0`, `c0`) and scaled by `s`.
    pub fn push_block(&mut self, r0: usize, c0: usize, a: &SpMat, s: f64) {
        for (i, j, v) in a.iter() {
            self.push(r0 + i, c0 + j, s * v);
        }
    }

    pub fn build(self) -> SpMat {
        SpMat::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl SpMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowidx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowidx: (0..n).collect(),
            vals: d.to_vec(),
        }
    }

    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps insertion order among duplicates -> deterministic sums
        t.sort_by_key(|a| (a.1, a.0));
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowidx = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rowidx.push(i);
                vals.push(v);
                colptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowidx,
            vals,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = Triplets::new(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// Entries of column `j` as (row indices, values).
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.colptr[j]..self.colptr[j + 1];
        (&self.rowidx[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_acc(x, 1.0, &mut y);
        y
    }

    /// `y += s * A x`
    pub fn matvec_acc(&self, x: &[f64], s: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec: x has wrong length");
        assert_eq!(y.len(), self.nrows, "matvec: y has wrong length");
        for j in 0..self.ncols {
            let xj = s * x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
    }

    /// `Aᵀ x`
    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "tmatvec: x has wrong length");
        (0..self.ncols)
            .map(|j| {
                let (rows, vals) = self.col(j);
                rows.iter().zip(vals).map(|(&i, &v)| v * x[i]).sum()
            })
            .collect()
    }

    pub fn checked_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec", self.ncols, x.len())?;
        Ok(self.matvec(x))
    }

    pub fn transpose(&self) -> SpMat {
        let t = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        SpMat::from_triplets(self.ncols, self.nrows, t)
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: f64, other: &SpMat, b: f64) -> SpMat {
        assert_eq!(
            (self.nrows, self.ncols),
            (other.nrows, other.ncols),
            "lincomb: shape mismatch"
        );
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        t.extend(self.iter().map(|(i, j, v)| (i, j, a * v)));
        t.extend(other.iter().map(|(i, j, v)| (i, j, b * v)));
        SpMat::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn add(&self, other: &SpMat) -> SpMat {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn scaled(&self, s: f64) -> SpMat {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `A · diag(d)`
    pub fn scale_cols(&self, d: &[f64]) -> SpMat {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for j in 0..self.ncols {
            for k in out.colptr[j]..out.colptr[j + 1] {
                out.vals[k] *= d[j];
            }
        }
        out
    }

    /// `diag(d) · A`
    pub fn scale_rows(&self, d: &[f64]) -> SpMat {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for k in 0..out.vals.len() {
            out.vals[k] *= d[out.rowidx[k]];
        }
        out
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &SpMat) -> SpMat {
        assert_eq!(self.ncols, other.nrows, "mul: inner dimension mismatch");
        let mut colptr = vec![0usize; other.ncols + 1];
        let mut rowidx = Vec::new();
        let mut vals = Vec::new();
        let mut acc = vec![0.0; self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut pattern: Vec<usize> = Vec::new();
        for j in 0..other.ncols {
            pattern.clear();
            let (brows, bvals) = other.col(j);
            for (&k, &bkj) in brows.iter().zip(bvals) {
                let (arows, avals) = self.col(k);
                for (&i, &aik) in arows.iter().zip(avals) {
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        pattern.push(i);
                    }
                    acc[i] += aik * bkj;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                rowidx.push(i);
                vals.push(acc[i]);
            }
            colptr[j + 1] = rowidx.len();
        }
        SpMat {
            nrows: self.nrows,
            ncols: other.ncols,
            colptr,
            rowidx,
            vals,
        }
    }

    /// Columns `start..end` as a new matrix.
    pub fn cols(&self, start: usize, end: usize) -> SpMat {
        assert!(start <= end && end <= self.ncols);
        let off = self.colptr[start];
        SpMat {
            nrows: self.nrows,
            ncols: end - start,
            colptr: self.colptr[start..=end].iter().map(|p| p - off).collect(),
            rowidx: self.rowidx[off..self.colptr[end]].to_vec(),
            vals: self.vals[off..self.colptr[end]].to_vec(),
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn rows(&self, start: usize, end: usize) -> SpMat {
        assert!(start <= end && end <= self.nrows);
        let t = self
            .iter()
            .filter(|&(i, _, _)| i >= start && i < end)
            .map(|(i, j, v)| (i - start, j, v))
            .collect();
        SpMat::from_triplets(end - start, self.ncols, t)
    }

    /// Appends dense rows below the matrix.
    pub fn append_rows(&self, rows: &[Vec<f64>]) -> SpMat {
        let mut t: Vec<_> = self.iter().collect();
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), self.ncols, "append_rows: row length");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((self.nrows + r, j, v));
                }
            }
        }
        SpMat::from_triplets(self.nrows + rows.len(), self.ncols, t)
    }

    /// Dense row `i` (slow; used for small border rows).
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    /// Block-diagonal matrix with `n` copies of `self`.
    pub fn kron_identity(&self, n: usize) -> SpMat {
        let mut t = Triplets::with_capacity(self.nrows * n, self.ncols * n, self.nnz() * n);
        for b in 0..n {
            t.push_block(b * self.nrows, b * self.ncols, self, 1.0);
        }
        t.build()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rs = vec![0.0; self.nrows];
        for (i, _, v) in self.iter() {
            rs[i] += v.abs();
        }
        rs.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise difference between two matrices of the same shape.
    pub fn max_abs_diff(&self, other: &SpMat) -> f64 {
        self.lincomb(1.0, other, -1.0).max_abs()
    }

    pub fn sum(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols && self.max_abs_diff(&self.transpose()) <= tol
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    pub fn to_faer_dense(&self) -> faer::Mat<f64> {
        let mut d = faer::Mat::<f64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub(crate) fn to_faer(&self) -> SparseColMat<usize, f64> {
        let sym = SymbolicSparseColMat::new_checked(
            self.nrows,
            self.ncols,
            self.colptr.clone(),
            None,
            self.rowidx.clone(),
        );
        SparseColMat::new(sym, self.vals.clone())
    }
}

/// Dense helpers on plain slices.
pub mod vecops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm2(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn norm_inf(a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y += s x`
    pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += s * xi;
        }
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// `a + s·b`
    pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    }

    pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
        a.iter().map(|x| s * x).collect()
    }
}
