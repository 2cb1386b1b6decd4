use alloc::vec::Vec;

use super::tensor::pairs;
use super::QuadTensor;
use crate::numerics::{orthonormal_columns, svd_thin};
use crate::{Error, Matrix, Result};

/// Default relative singular-value cutoff for deflation.
pub const DEFAULT_RHO: f64 = 1e-8;

/// Removes the span of `V` from every `θ_ij`. `V` is first replaced by a
/// Euclidean-orthonormal basis of its span, and the projection is applied
/// twice for stability.
pub fn orthogonalize_theta(theta: &QuadTensor, v: &Matrix) -> Result<QuadTensor> {
    if v.nrows() != theta.dofs() {
        return Err(Error::dims("basis rows differ from the tensor length"));
    }
    let q = orthonormal_columns(v);
    let q = q.columns(0, v.ncols().min(q.ncols()));
    let mut out = theta.map_rows(|d| {
        let mut d = d.clone();
        for _ in 0..2 {
            let c = q.tr_mul(&d);
            d -= q * c;
        }
        d
    });
    out.mark_orthogonalized();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Deflation {
    /// Orthonormal columns spanning the retained directions.
    pub basis: Matrix,
    /// All singular values of the stacked matrix, descending.
    pub singular_values: Vec<f64>,
}

impl Deflation {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Stacks `[v_1 … v_n, θ_ij (i ≤ j)]` and keeps the left singular vectors with
/// `σ_k ≥ rho · σ_1`.
pub fn deflate_basis(v: &Matrix, theta: Option<&QuadTensor>, rho: f64) -> Result<Deflation> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("deflation tolerance must lie in (0, 1)"));
    }
    let mut cols: Vec<_> = v.column_iter().map(|c| c.clone_owned()).collect();
    if let Some(t) = theta {
        if t.dofs() != v.nrows() {
            return Err(Error::dims("tensor length differs from the basis rows"));
        }
        cols.extend(pairs(t.n()).map(|(i, j)| t.column(i, j)));
    }
    if cols.is_empty() || v.nrows() == 0 {
        return Err(Error::invalid("nothing to deflate"));
    }
    let r = Matrix::from_columns(&cols);
    let (u, singular_values) = if r.ncols() <= r.nrows() {
        let s = svd_thin(&r)?;
        (s.u, s.singular_values)
    } else {
        // wide stack: left singular vectors of R are right singular vectors of Rᵀ
        let s = svd_thin(&r.transpose())?;
        (s.v, s.singular_values)
    };
    let first = singular_values.first().copied().unwrap_or(0.0);
    if !(first > 0.0) {
        return Err(Error::invalid("stacked basis is identically zero"));
    }
    let m = singular_values
        .iter()
        .take_while(|&&s| s >= rho * first)
        .count();
    Ok(Deflation {
        basis: u.columns(0, m).clone_owned(),
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vector;

    fn tensor(dofs: usize, n: usize) -> QuadTensor {
        let p = n * (n + 1) / 2;
        QuadTensor::from_packed(
            n,
            Matrix::from_fn(dofs, p, |r, c| ((r * 5 + c * 11) as f64 * 0.17).cos()),
        )
        .unwrap()
    }

    #[test]
    fn orthogonal_columns_are_untouched() {
        let v = Matrix::from_fn(6, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let mut t = tensor(6, 2);
        let mut data = t.packed().clone();
        data.rows_mut(0, 2).fill(0.0);
        t = QuadTensor::from_packed(2, data).unwrap();
        let o = orthogonalize_theta(&t, &v).unwrap();
        assert!((o.packed() - t.packed()).amax() < 1e-12);
        assert!(o.is_orthogonalized());
    }

    #[test]
    fn column_equal_to_a_basis_vector_vanishes() {
        let v = Matrix::from_fn(5, 2, |r, c| (r + 2 * c) as f64 + 1.0);
        let mut t = QuadTensor::zeros(5, 2);
        t.set_column(0, 0, &v.column(0).clone_owned());
        let o = orthogonalize_theta(&t, &v).unwrap();
        assert!(o.column(0, 0).norm() < 1e-12 * v.column(0).norm());
    }

    #[test]
    fn non_orthogonal_basis_is_fully_removed() {
        let v = Matrix::from_fn(8, 3, |r, c| ((r + 1) as f64).powi(c as i32) / 8.0);
        let o = orthogonalize_theta(&tensor(8, 3), &v).unwrap();
        assert!((v.transpose() * o.packed()).amax() <= 1e-10 * o.norm().max(1.0));
    }

    #[test]
    fn square_basis_annihilates_the_tensor() {
        let v = Matrix::identity(3, 3);
        let o = orthogonalize_theta(&tensor(3, 3), &v).unwrap();
        assert!(o.norm() < 1e-14);
    }

    #[test]
    fn deflation_of_zero_tensor_keeps_the_basis_span() {
        let v = Matrix::from_fn(7, 2, |r, c| ((r * (c + 1)) as f64).sin() + 0.1);
        let d = deflate_basis(&v, Some(&QuadTensor::zeros(7, 2)), 1e-8).unwrap();
        assert_eq!(d.rank(), 2);
        let proj = &d.basis * d.basis.tr_mul(&v);
        assert!((proj - &v).amax() < 1e-12);
    }

    #[test]
    fn duplicate_columns_reduce_the_rank() {
        let v = Matrix::from_fn(6, 2, |r, c| (r + c) as f64 + 0.5 * (r * r) as f64);
        let mut t = QuadTensor::zeros(6, 2);
        t.set_column(0, 1, &v.column(0).clone_owned());
        t.set_column(1, 1, &(v.column(1) * 2.0));
        let d = deflate_basis(&v, Some(&t), 1e-8).unwrap();
        assert_eq!(d.rank(), 2);
        assert!((d.basis.transpose() * &d.basis - Matrix::identity(2, 2)).amax() < 1e-10);
        assert!(deflate_basis(&Matrix::zeros(4, 1), None, 1e-8).is_err());
        assert!(deflate_basis(&v, None, 1.5).is_err());
    }

    #[test]
    fn wide_stack() {
        let v = Matrix::identity(4, 3);
        let t = tensor(4, 3);
        let d = deflate_basis(&v, Some(&t), 1e-8).unwrap();
        assert_eq!(d.rank(), 4);
        let _ = Vector::zeros(1);
    }
}
