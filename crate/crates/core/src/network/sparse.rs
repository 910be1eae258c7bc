//! Compressed sparse row matrices used for the path/link and OD/path mappings.

use std::ops::Deref;

use nalgebra::DMatrix;

use super::NetworkError;

/// Real-valued CSR matrix. Column indices are strictly increasing within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets in any order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, NetworkError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(NetworkError::IndexOutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(NetworkError::NonFiniteEntry { row: r, col: c });
            }
            if last == Some((r, c)) {
                return Err(NetworkError::DuplicateEntry { row: r, col: c });
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Converts a dense row-major matrix, dropping exact zeros.
    pub fn from_dense_rows(rows: &[Vec<f64>], n_cols: usize) -> Result<Self, NetworkError> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(NetworkError::DimensionMismatch {
                    what: "dense row length",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, &triplets)
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

    /// Stored `(column, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "mul_vec: length mismatch");
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `y = Mᵀ x`.
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "tmul_vec: length mismatch");
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}

/// CSR matrix whose stored entries are all exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBinaryMatrix(SparseMatrix);

impl SparseBinaryMatrix {
    /// Builds the matrix from the positions of its ones.
    pub fn from_positions(
        n_rows: usize,
        n_cols: usize,
        positions: &[(usize, usize)],
    ) -> Result<Self, NetworkError> {
        let triplets: Vec<_> = positions.iter().map(|&(r, c)| (r, c, 1.0)).collect();
        SparseMatrix::from_triplets(n_rows, n_cols, &triplets).map(Self)
    }

    /// Wraps a real matrix, rejecting any stored value other than 1.
    pub fn try_from_matrix(m: SparseMatrix) -> Result<Self, NetworkError> {
        if let Some((row, col, _)) = m.triplets().find(|&(_, _, v)| v != 1.0) {
            return Err(NetworkError::NonBinaryEntry { row, col });
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &SparseMatrix {
        &self.0
    }

    /// Column indices of the ones in row `r`.
    pub fn row_support(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.0.row(r).map(|(c, _)| c)
    }
}

impl Deref for SparseBinaryMatrix {
    type Target = SparseMatrix;

    fn deref(&self) -> &SparseMatrix {
        &self.0
    }
}
