//! Minimal sparse containers: a sorted sparse vector and a compressed
//! sparse column matrix, with only the products the pipeline needs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    dim: usize,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseVec {
    /// The zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            idx: Vec::new(),
            val: Vec::new(),
        }
    }

    /// Builds a vector from (index, value) pairs. Pairs may arrive in any
    /// order; duplicate indices are summed and exact zeros are dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut idx = Vec::with_capacity(entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i as usize >= dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: i as usize + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::param("value", format!("non-finite entry at {i}")));
            }
            if idx.last() == Some(&i) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(i);
                val.push(v);
            }
        }
        let mut out = SparseVec { dim, idx, val };
        out.drop_zeros();
        Ok(out)
    }

    /// Builds from a dense slice, keeping nonzero entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                idx.push(i as u32);
                val.push(v);
            }
        }
        SparseVec {
            dim: dense.len(),
            idx,
            val,
        }
    }

    fn drop_zeros(&mut self) {
        if self.val.iter().any(|&v| v == 0.0) {
            let kept: Vec<(u32, f64)> = self
                .idx
                .iter()
                .zip(&self.val)
                .filter(|&(_, &v)| v != 0.0)
                .map(|(&i, &v)| (i, v))
                .collect();
            self.idx = kept.iter().map(|&(i, _)| i).collect();
            self.val = kept.iter().map(|&(_, v)| v).collect();
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// Iterates stored (index, value) entries in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    /// Dot product against a dense slice of the same dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum()
    }

    /// Multiplies every stored value by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.val {
            *v *= factor;
        }
        self.drop_zeros();
        self
    }

    /// Expands to a dense vector.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// Compressed sparse column matrix over f64.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Assembles a matrix from per-column sparse vectors, each of
    /// dimension `rows`.
    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in columns {
            if col.dim() != rows {
                return Err(Error::Dimension {
                    expected: rows,
                    got: col.dim(),
                });
            }
            for (i, v) in col.iter() {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(CscMatrix {
            rows,
            cols: columns.len(),
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Assembles directly from raw CSC parts. Indices within a column must
    /// be strictly increasing; all parts are validated.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1
            || col_ptr.first() != Some(&0)
            || col_ptr.last() != Some(&row_idx.len())
            || row_idx.len() != values.len()
        {
            return Err(Error::Artifact("inconsistent CSC structure".into()));
        }
        for j in 0..cols {
            if col_ptr[j] > col_ptr[j + 1] {
                return Err(Error::Artifact("descending column pointers".into()));
            }
            let mut prev: Option<u32> = None;
            for &r in &row_idx[col_ptr[j]..col_ptr[j + 1]] {
                if r as usize >= rows || prev.is_some_and(|p| p >= r) {
                    return Err(Error::Artifact(format!("bad row index {r} in column {j}")));
                }
                prev = Some(r);
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Artifact("non-finite matrix entry".into()));
        }
        Ok(CscMatrix {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[u32], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Copies column `j` out as a sparse vector.
    pub fn col_vec(&self, j: usize) -> SparseVec {
        let (idx, val) = self.col(j);
        SparseVec {
            dim: self.rows,
            idx: idx.to_vec(),
            val: val.to_vec(),
        }
    }

    /// Iterates all stored (row, col, value) triples in column-major order.
    pub fn triples(&self) -> impl Iterator<Item = (u32, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| {
            let (idx, val) = self.col(j);
            idx.iter()
                .zip(val)
                .map(move |(&r, &v)| (r, j, v))
                .collect::<Vec<_>>()
        })
    }

    /// Dense product `self * x` where `x` has `cols` rows.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.cols, "inner dimensions must agree");
        let p = x.ncols();
        let mut out = DMatrix::zeros(self.rows, p);
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            for c in 0..p {
                let xjc = x[(j, c)];
                if xjc != 0.0 {
                    for (&r, &v) in idx.iter().zip(val) {
                        out[(r as usize, c)] += v * xjc;
                    }
                }
            }
        }
        out
    }

    /// Dense product `selfᵀ * y` where `y` has `rows` rows.
    pub fn tr_mul_dense(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.rows, "inner dimensions must agree");
        let p = y.ncols();
        let mut out = DMatrix::zeros(self.cols, p);
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            for c in 0..p {
                let mut acc = 0.0;
                for (&r, &v) in idx.iter().zip(val) {
                    acc += v * y[(r as usize, c)];
                }
                out[(j, c)] = acc;
            }
        }
        out
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Mean of the strictly positive stored entries, if any exist.
    pub fn mean_positive(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &v in &self.values {
            if v > 0.0 {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Expands to a dense matrix (intended for small inputs).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            for (&r, &v) in idx.iter().zip(val) {
                out[(r as usize, j)] = v;
            }
        }
        out
    }

    /// Builds a CSC matrix from a dense one, keeping nonzero entries.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let cols: Vec<SparseVec> = (0..m.ncols())
            .map(|j| SparseVec::from_dense(m.column(j).as_slice()))
            .collect();
        CscMatrix::from_columns(m.nrows(), &cols).expect("dense columns have matching dimension")
    }

    /// The transposed matrix in CSC form.
    pub fn transpose(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.rows + 1];
        for &r in &self.row_idx {
            counts[r as usize + 1] += 1;
        }
        for i in 0..self.rows {
            counts[i + 1] += counts[i];
        }
        let col_ptr = counts.clone();
        let mut row_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut cursor = counts;
        for (r, j, v) in self.triples() {
            let slot = cursor[r as usize];
            row_idx[slot] = j as u32;
            values[slot] = v;
            cursor[r as usize] += 1;
        }
        CscMatrix {
            rows: self.cols,
            cols: self.rows,
            col_ptr,
            row_idx,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn from_pairs_sorts_merges_and_drops_zeros() {
        let v = SparseVec::from_pairs(5, [(3, 1.0), (1, 2.0), (3, 0.5), (4, 0.0)]).unwrap();
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(1, 2.0), (3, 1.5)]);
    }

    #[test]
    fn from_pairs_rejects_out_of_range() {
        assert!(SparseVec::from_pairs(2, [(2, 1.0)]).is_err());
    }

    #[test]
    fn dot_and_norm() {
        let v = SparseVec::from_pairs(4, [(0, 1.0), (2, -2.0)]).unwrap();
        assert_relative_eq!(v.dot_dense(&[1.0, 5.0, 3.0, 7.0]), -5.0);
        assert_relative_eq!(v.norm_sq(), 5.0);
    }

    #[test]
    fn csc_round_trips_through_dense() {
        let cols = vec![
            SparseVec::from_pairs(3, [(0, 2.0), (2, 1.0)]).unwrap(),
            SparseVec::zeros(3),
            SparseVec::from_pairs(3, [(1, -4.0)]).unwrap(),
        ];
        let m = CscMatrix::from_columns(3, &cols).unwrap();
        assert_eq!((m.rows(), m.cols(), m.nnz()), (3, 3, 3));
        let d = m.to_dense();
        assert_eq!(CscMatrix::from_dense(&d), m);
    }

    #[test]
    fn products_match_dense_arithmetic() {
        let m = CscMatrix::from_columns(
            2,
            &[
                SparseVec::from_pairs(2, [(0, 1.0), (1, 3.0)]).unwrap(),
                SparseVec::from_pairs(2, [(0, -2.0)]).unwrap(),
                SparseVec::from_pairs(2, [(1, 5.0)]).unwrap(),
            ],
        )
        .unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
        let want = m.to_dense() * &x;
        assert_relative_eq!(m.mul_dense(&x), want, epsilon = 1e-12);

        let y = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let want_t = m.to_dense().transpose() * &y;
        assert_relative_eq!(m.tr_mul_dense(&y), want_t, epsilon = 1e-12);
    }

    #[test]
    fn transpose_is_involutive() {
        let m = CscMatrix::from_columns(
            3,
            &[
                SparseVec::from_pairs(3, [(0, 1.0), (2, 2.0)]).unwrap(),
                SparseVec::from_pairs(3, [(1, 3.0)]).unwrap(),
            ],
        )
        .unwrap();
        let t = m.transpose();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.cols(), 3);
        assert_eq!(t.to_dense(), m.to_dense().transpose());
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn mean_positive_ignores_negatives() {
        let m = CscMatrix::from_columns(
            2,
            &[
                SparseVec::from_pairs(2, [(0, 2.0), (1, -1.0)]).unwrap(),
                SparseVec::from_pairs(2, [(0, 4.0)]).unwrap(),
            ],
        )
        .unwrap();
        assert_relative_eq!(m.mean_positive().unwrap(), 3.0);
        let z = CscMatrix::from_columns(2, &[SparseVec::zeros(2)]).unwrap();
        assert!(z.mean_positive().is_none());
    }
}
