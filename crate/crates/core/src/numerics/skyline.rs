//! Profile (skyline) LDLᵀ factorization of symmetric sparse matrices.
//!
//! Structured meshes numbered along their long axis give a narrow envelope,
//! so the factor costs `O(N·b²)` and is reused for every right-hand side.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CsrMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix, Result, Vector};

/// Relative pivot size below which a symmetric factorization is declared singular.
const SINGULAR_PIVOT: f64 = 1e-14;

/// Reusable `A = L·D·Lᵀ` factor. Produced by [`factor_spd`] (all pivots
/// positive) or [`factor_symmetric`] (indefinite allowed, no pivoting).
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    /// First column stored in each row of `L`.
    first: Vec<usize>,
    /// Offset of `(i, first[i])` in `data`; row `i` occupies `start[i]..=start[i] + i - first[i]`.
    start: Vec<usize>,
    /// Strict lower part of `L` with `D` on the diagonal positions.
    data: Vec<f64>,
    positive_definite: bool,
}

/// Cholesky-type factorization; fails on the first non-positive pivot.
pub fn factor_spd(a: &CsrMatrix) -> Result<SpdFactor> {
    SpdFactor::factor(a, true)
}

/// LDLᵀ without pivoting for symmetric (possibly indefinite) matrices.
pub fn factor_symmetric(a: &CsrMatrix) -> Result<SpdFactor> {
    SpdFactor::factor(a, false)
}

impl SpdFactor {
    fn factor(a: &CsrMatrix, require_positive: bool) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("factorization needs a square matrix"));
        }
        let first = a.lower_profile();
        let mut start = Vec::with_capacity(n);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        let mut data = vec![0.0; len];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[start[i] + j - first[i]] += v;
                }
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);

        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            // g_ij = a_ij − Σ_k g_ik·L_jk, stored in place of row i.
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let k0 = fi.max(fj);
                let mut s = data[ri + j - fi];
                for k in k0..j {
                    s -= data[ri + k - fi] * data[rj + k - fj];
                }
                data[ri + j - fi] = s;
            }
            let mut d = data[ri + i - fi];
            for j in fi..i {
                let g = data[ri + j - fi];
                let dj = data[start[j] + j - first[j]];
                let l = g / dj;
                d -= g * l;
                data[ri + j - fi] = l;
            }
            if !d.is_finite() {
                return Err(Error::Factorization { pivot: i, value: d });
            }
            if require_positive {
                if d <= SINGULAR_PIVOT * scale {
                    return Err(Error::Factorization { pivot: i, value: d });
                }
            } else if d.abs() <= SINGULAR_PIVOT * scale {
                return Err(Error::Factorization { pivot: i, value: d });
            }
            data[ri + i - fi] = d;
        }
        Ok(Self {
            n,
            first,
            start,
            data,
            positive_definite: require_positive,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn pivot(&self, i: usize) -> f64 {
        self.data[self.start[i] + i - self.first[i]]
    }

    /// Number of negative pivots (the inertia index of the factored matrix).
    pub fn negative_pivots(&self) -> usize {
        (0..self.n).filter(|&i| self.pivot(i) < 0.0).count()
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        assert_eq!(b.len(), self.n);
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.data[ri + k - fi] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.pivot(i);
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.start[i];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.data[ri + k - fi] * xi;
            }
        }
    }

    /// `D^{1/2}·Lᵀ·x`, so that `xᵀAx = ‖D^{1/2}Lᵀx‖²` for positive-definite `A`.
    pub fn half_transform(&self, x: &Vector) -> Result<Vector> {
        if !self.positive_definite {
            return Err(Error::invalid(
                "half transform needs a positive definite factor",
            ));
        }
        let mut y = x.clone();
        for i in 0..self.n {
            let fi = self.first[i];
            let ri = self.start[i];
            for k in fi..i {
                y[k] += self.data[ri + k - fi] * x[i];
            }
        }
        for i in 0..self.n {
            y[i] *= self.pivot(i).sqrt();
        }
        Ok(y)
    }
}
