//! Sparse symmetric matrices and dense low-rank factors.
//!
//! `SparseSym` keeps the upper triangle as canonical triplets and a
//! compiled row-indexed form holding both halves for matrix-vector
//! products. `Factor` is a column-major `n x r` matrix `Y`; the PSD
//! matrix `X = Y Y^T` is never formed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};

/// Sparse symmetric `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    /// Upper-triangular `(row, col, value)` with `row <= col`, sorted, unique.
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a matrix from triplets. Either triangle may be given; `(i, j)`
    /// and `(j, i)` address the same entry and duplicates are summed.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { row: i, col: j, n });
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value {v} at ({i}, {j})")));
            }
            entries.push((i.min(j), i.max(j), v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        Ok(Self::compile(n, merged))
    }

    pub fn zeros(n: usize) -> Self {
        Self::compile(n, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        Self::compile(n, (0..n).map(|i| (i, i, scale)).collect())
    }

    fn compile(n: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &entries {
            counts[i + 1] += 1;
            if i != j {
                counts[j + 1] += 1;
            }
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let nnz = row_ptr[n];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = counts;
        for &(i, j, v) in &entries {
            col_idx[next[i]] = j;
            values[next[i]] = v;
            next[i] += 1;
            if i != j {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            n,
            entries,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Canonical upper-triangular entries.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Stored nonzeros of the full symmetric matrix (mirrors counted).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the full row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `S x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("spmv", self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.spmv_acc(1.0, x, &mut out);
        Ok(out)
    }

    /// `out += scale * S x`; lengths are the caller's responsibility.
    pub(crate) fn spmv_acc(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o += scale * acc;
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    /// `<S, Y Y^T>`.
    pub fn gram_inner(&self, y: &Factor) -> Result<f64> {
        check_dim("gram_inner", self.n, y.rows())?;
        Ok(self.bilinear(y, y))
    }

    /// `<S, Y D^T>` for two factors of equal shape.
    pub(crate) fn bilinear(&self, y: &Factor, d: &Factor) -> f64 {
        let mut acc = 0.0;
        for &(p, q, v) in &self.entries {
            if p == q {
                acc += v * Factor::cross_row_dot(y, p, d, p);
            } else {
                acc += v * (Factor::cross_row_dot(y, p, d, q) + Factor::cross_row_dot(y, q, d, p));
            }
        }
        acc
    }

    /// Row-major dense copy; meant for small instances and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for &(i, j, v) in &self.entries {
            dense[i * n + j] = v;
            dense[j * n + i] = v;
        }
        dense
    }
}

/// Dense `n x r` factor stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    n: usize,
    r: usize,
    data: Vec<f64>,
}

impl Factor {
    pub fn zeros(n: usize, r: usize) -> Self {
        Self {
            n,
            r,
            data: vec![0.0; n * r],
        }
    }

    pub fn from_col_major(n: usize, r: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("Factor::from_col_major", n * r, data.len())?;
        Ok(Self { n, r, data })
    }

    /// Builds `Y` from `f(row, col)`.
    pub fn from_fn(n: usize, r: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * r);
        for k in 0..r {
            for i in 0..n {
                data.push(f(i, k));
            }
        }
        Self { n, r, data }
    }

    /// I.i.d. `N(0, std^2)` entries.
    pub fn gaussian<R: Rng + ?Sized>(n: usize, r: usize, std: f64, rng: &mut R) -> Self {
        let data = (0..n * r)
            .map(|_| std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { n, r, data }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i + k * self.n]
    }

    pub fn col(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn col_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero size
        self.data.chunks_exact(self.n.max(1)).take(self.r)
    }

    /// `<row_i(Y), row_j(Y)> = (Y Y^T)_{ij}`.
    pub fn row_dot(&self, i: usize, j: usize) -> f64 {
        Self::cross_row_dot(self, i, self, j)
    }

    pub(crate) fn cross_row_dot(y: &Factor, i: usize, d: &Factor, j: usize) -> f64 {
        let (ny, nd) = (y.n, d.n);
        (0..y.r).map(|k| y.data[i + k * ny] * d.data[j + k * nd]).sum()
    }

    /// `||Y||_F^2`, which equals `Tr(Y Y^T)`.
    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Appends the columns of `extra` (same row count).
    pub fn append_columns(&mut self, extra: &Factor) -> Result<()> {
        check_dim("Factor::append_columns", self.n, extra.n)?;
        self.data.extend_from_slice(&extra.data);
        self.r += extra.r;
        Ok(())
    }

    /// `Y^T v` (length `r`).
    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        self.columns().map(|c| dot(c, v)).collect()
    }

    /// `Y g` (length `n`).
    pub fn mul_vec(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (c, &gk) in self.columns().zip(g) {
            axpy(gk, c, &mut out);
        }
        out
    }
}

/// Dense rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("RectMatrix::from_row_major", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_dim("RectMatrix::from_rows", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a * x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k3_laplacian() -> SparseSym {
        SparseSym::from_triplets(
            3,
            [
                (0, 0, 2.0),
                (1, 1, 2.0),
                (2, 2, 2.0),
                (0, 1, -1.0),
                (1, 2, -1.0),
                (0, 2, -1.0),
            ],
        )
        .unwrap()
    }

    fn random_sym(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseSym {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < density {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseSym::from_triplets(n, t).unwrap()
    }

    fn dense_mul(dense: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| dense[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn spmv_identity() {
        let s = SparseSym::identity(3);
        assert_eq!(s.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let out = k3_laplacian().spmv(&[1.0, 1.0, 1.0]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let err = SparseSym::identity(3).spmv(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn spmv_matches_dense_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_sym(50, 0.2, &mut rng);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expect = dense_mul(&s.to_dense(), 50, &x);
        let got = s.spmv(&x).unwrap();
        let err: f64 = got
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-12 * norm(&expect));
    }

    #[test]
    fn duplicates_are_summed_and_triangles_merge() {
        let s = SparseSym::from_triplets(2, [(0, 1, 1.0), (1, 0, 2.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(s.entries(), &[(0, 1, 3.5)]);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = SparseSym::from_triplets(2, [(0, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
    }

    #[test]
    fn fro_norm_fixtures() {
        assert!((SparseSym::identity(3).fro_norm() - 3f64.sqrt()).abs() < 1e-15);
        assert!((k3_laplacian().fro_norm() - 18f64.sqrt()).abs() < 1e-14);
        assert_eq!(SparseSym::zeros(4).fro_norm(), 0.0);
    }

    #[test]
    fn gram_inner_fixtures() {
        let eye = Factor::from_fn(3, 3, |i, k| if i == k { 1.0 } else { 0.0 });
        assert!((SparseSym::identity(3).gram_inner(&eye).unwrap() - 3.0).abs() < 1e-15);
        let same_rows = Factor::from_fn(3, 2, |_, k| (k + 1) as f64);
        assert!(k3_laplacian().gram_inner(&same_rows).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gram_inner_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20;
        let s = random_sym(n, 0.3, &mut rng);
        let y = Factor::gaussian(n, 4, 1.0, &mut rng);
        let dense = s.to_dense();
        // trace(S Y Y^T) = sum_k y_k^T S y_k
        let expect: f64 = y.columns().map(|c| dot(c, &dense_mul(&dense, n, c))).sum();
        let got = s.gram_inner(&y).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn factor_trace_is_fro_norm_sq() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = Factor::gaussian(7, 3, 1.0, &mut rng);
        let tr: f64 = (0..7).map(|i| y.row_dot(i, i)).sum();
        assert!((tr - y.fro_norm_sq()).abs() < 1e-12 * tr);
    }

    #[test]
    fn append_columns_grows_rank() {
        let mut y = Factor::zeros(4, 2);
        y.append_columns(&Factor::from_fn(4, 1, |i, _| i as f64)).unwrap();
        assert_eq!(y.rank(), 3);
        assert_eq!(y.col(2), &[0.0, 1.0, 2.0, 3.0]);
        assert!(y.append_columns(&Factor::zeros(3, 1)).is_err());
    }
}
