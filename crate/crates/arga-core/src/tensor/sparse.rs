use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::dense::DenseMatrix;

/// Compressed sparse row matrix. Within each row the column indices are
/// strictly increasing and no explicit zeros are stored, so iteration order
/// (and therefore floating-point summation order) is fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<S: Scalar> {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    pub fn empty(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![S::one(); n],
        }
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed, and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, S)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Argument(format!(
                    "triplet ({r}, {c}) outside {rows}x{cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, S)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        row_offsets.push(0);
        let mut current_row = 0usize;
        let mut k = 0usize;
        while k < sorted.len() {
            let (r, c, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == r && sorted[k].1 == c {
                v += sorted[k].2;
                k += 1;
            }
            while current_row < r {
                row_offsets.push(col_indices.len());
                current_row += 1;
            }
            if v != S::zero() {
                col_indices.push(c);
                values.push(v);
            }
        }
        while current_row < rows {
            row_offsets.push(col_indices.len());
            current_row += 1;
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Converts a dense matrix, keeping only its nonzero entries.
    pub fn from_dense(d: &DenseMatrix<S>) -> Self {
        let mut row_offsets = Vec::with_capacity(d.rows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..d.rows() {
            for (j, &v) in d.row(i).iter().enumerate() {
                if v != S::zero() {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            rows: d.rows(),
            cols: d.cols(),
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`, in increasing column order.
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => S::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    /// `self · d` (sparse-dense product). Row-major accumulation in fixed
    /// index order keeps the result deterministic.
    pub fn spmm(&self, d: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
        if self.cols != d.rows() {
            return Err(Error::shape("spmm", self.shape(), d.shape()));
        }
        let mut out = DenseMatrix::zeros(self.rows, d.cols());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let d_row = d.row(j);
                for (o, &x) in out_row.iter_mut().zip(d_row) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · d` without materializing the transpose: scatters each sparse
    /// row into the output, again in fixed order.
    pub fn spmm_at(&self, d: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
        if self.rows != d.rows() {
            return Err(Error::shape("spmm_at", self.shape(), d.shape()));
        }
        let mut out = DenseMatrix::zeros(self.cols, d.cols());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let d_row = d.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let out_row = out.row_mut(j);
                for (o, &x) in out_row.iter_mut().zip(d_row) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    pub fn densify(&self) -> DenseMatrix<S> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().copied().sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.iter()
            .all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    /// Density as a fraction of all entries; 0 for empty shapes.
    pub fn density(&self) -> f64 {
        let total = self.rows * self.cols;
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }
}
