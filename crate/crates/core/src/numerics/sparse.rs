//! Compressed sparse row storage for assembled finite-element matrices.
//!
//! Assembled operators of one model share a single sparsity pattern, so linear
//! combinations such as `a·M + b·K` are taken entry by entry on `values`.
//! The documented exchange form is the symmetric triplet list returned by
//! [`CsrMatrix::upper_triplets`]: `(row, col, value)` with `row <= col`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix from per-row column lists. Columns are sorted and
    /// deduplicated here.
    pub fn from_pattern(nrows: usize, ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), nrows);
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            debug_assert!(row.iter().all(|&c| c < ncols));
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(nrows, ncols, rows);
        for &(i, j, v) in triplets {
            m.add_at(i, j, v);
        }
        m
    }

    /// Keeps every structurally nonzero entry plus the full diagonal.
    pub fn from_dense(a: &Matrix) -> Self {
        let (nrows, ncols) = a.shape();
        let rows = (0..nrows)
            .map(|i| (0..ncols).filter(|&j| i == j || a[(i, j)] != 0.0).collect())
            .collect();
        let mut m = Self::from_pattern(nrows, ncols, rows);
        for i in 0..nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[k] = a[(i, m.col_idx[k])];
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern(n, n, (0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is outside the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s·other`; both matrices must share a pattern.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        if !self.same_pattern(other) {
            return Err(Error::dims("axpy requires identical sparsity patterns"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    /// `Σ cᵢ·Aᵢ`. The result carries the union of the input patterns.
    pub fn linear_combination(terms: &[(f64, &Self)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::invalid("empty linear combination"))?
            .1;
        if terms
            .iter()
            .any(|(_, m)| m.nrows != first.nrows || m.ncols != first.ncols)
        {
            return Err(Error::dims(
                "linear combination of differently sized matrices",
            ));
        }
        let mut out = if terms.iter().all(|(_, m)| m.same_pattern(first)) {
            first.zeros_like()
        } else {
            let rows = (0..first.nrows)
                .map(|i| {
                    terms
                        .iter()
                        .flat_map(|(_, m)| m.row(i).0.iter().copied())
                        .collect()
                })
                .collect();
            Self::from_pattern(first.nrows, first.ncols, rows)
        };
        for &(s, m) in terms {
            if m.same_pattern(&out) {
                out.axpy(s, m)?;
                continue;
            }
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    out.add_at(i, j, s * v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.ncols);
        let mut y = Vector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    /// `|A|·|x|` entrywise, used for roundoff bounds.
    pub fn abs_mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.ncols);
        let mut y = Vector::zeros(self.nrows);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[i] += self.values[k].abs() * x[self.col_idx[k]].abs();
            }
        }
        y
    }

    pub fn mul_dense(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = Matrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..self.nrows {
                let mut s = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.values[k] * col[self.col_idx[k]];
                }
                y[(i, c)] = s;
            }
        }
        y
    }

    /// `xᵀ·A·y`.
    pub fn bilinear(&self, x: &Vector, y: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.nrows {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * y[self.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    pub fn to_dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.col_idx[k])] += self.values[k];
            }
        }
        a
    }

    /// Upper-triangle triplets `(row, col, value)` with `row <= col`.
    pub fn upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j >= i {
                    out.push((i, j, self.values[k]));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |a_ij − a_ji| / max |a_ij|` (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn diagonal(&self) -> Vector {
        Vector::from_iterator(self.nrows, (0..self.nrows).map(|i| self.get(i, i)))
    }

    /// Copy with row and column `p` removed (square matrices only).
    pub fn without_index(&self, p: usize) -> Self {
        let n = self.nrows;
        let shift = |j: usize| if j > p { j - 1 } else { j };
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in (0..n).filter(|&i| i != p) {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j != p {
                    triplets.push((shift(i), shift(j), self.values[k]));
                }
            }
        }
        Self::from_triplets(n - 1, n - 1, &triplets)
    }

    /// Smallest column index stored in each row, restricted to `col <= row`.
    pub(crate) fn lower_profile(&self) -> Vec<usize> {
        (0..self.nrows)
            .map(|i| {
                let (cols, _) = self.row(i);
                cols.first().map_or(i, |&c| c.min(i))
            })
            .collect()
    }
}
