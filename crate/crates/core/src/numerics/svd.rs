use alloc::vec::Vec;
use nalgebra::SVD;

use crate::{Error, Matrix, Result};

/// Thin SVD `R = U·diag(σ)·Vᵀ` with σ descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    /// Number of singular values with `σ_k >= rho·σ_1`.
    pub fn rank(&self, rho: f64) -> usize {
        match self.singular_values.first() {
            Some(&s1) if s1 > 0.0 => self
                .singular_values
                .iter()
                .take_while(|&&s| s >= rho * s1)
                .count(),
            _ => 0,
        }
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (mut col, &s) in us.column_iter_mut().zip(&self.singular_values) {
            col *= s;
        }
        us * self.v.transpose()
    }
}

pub fn svd_thin(r: &Matrix) -> Result<ThinSvd> {
    let (rows, cols) = r.shape();
    if cols > rows {
        return Err(Error::dims(
            "thin SVD expects at least as many rows as columns",
        ));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite entry in SVD input"));
    }
    if cols == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: Matrix::zeros(0, 0),
        });
    }
    let svd = SVD::new(r.clone(), true, true);
    let u = svd.u.ok_or(Error::Singular)?;
    let v_t = svd.v_t.ok_or(Error::Singular)?;
    Ok(ThinSvd {
        u,
        singular_values: svd.singular_values.iter().copied().collect(),
        v: v_t.transpose(),
    })
}
