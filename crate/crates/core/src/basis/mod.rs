//! Reduction bases and their second-order extensions.

mod deflate;
mod derivatives;
mod tensor;

pub use deflate::{deflate_basis, orthogonalize_theta, Deflation, DEFAULT_RHO};
pub use derivatives::{
    modal_derivatives, static_derivative_pairs, static_derivatives, static_modal_derivatives,
    stiffness_directional_derivative, FdOptions,
};
pub use tensor::{pair_index, pairs, QuadTensor};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::fem::StructuralModel;
use crate::numerics::{eig_gsym, factor_spd, svd_thin};
use crate::{Error, Matrix, Result, Vector};
#[allow(unused_imports)]
use num_traits::Float;

/// Origin of a basis column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    VibrationMode { omega_sq: f64 },
    Krylov,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBasis {
    pub v: Matrix,
    pub kinds: Vec<ColumnKind>,
}

impl ReductionBasis {
    pub fn new(v: Matrix, kinds: Vec<ColumnKind>) -> Result<Self> {
        if kinds.len() != v.ncols() {
            return Err(Error::dims("one column kind per basis vector"));
        }
        Ok(Self { v, kinds })
    }

    pub fn other(v: Matrix) -> Self {
        let kinds = alloc::vec![ColumnKind::Other; v.ncols()];
        Self { v, kinds }
    }

    pub fn len(&self) -> usize {
        self.v.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.v.ncols() == 0
    }

    pub fn dofs(&self) -> usize {
        self.v.nrows()
    }

    /// `ω²` of every column when all of them are vibration modes.
    pub fn eigenvalues(&self) -> Option<Vec<f64>> {
        self.kinds
            .iter()
            .map(|k| match k {
                ColumnKind::VibrationMode { omega_sq } => Some(*omega_sq),
                _ => None,
            })
            .collect()
    }

    /// Fails when `σ_min < tol · σ_max`.
    pub fn check_independent(&self, tol: f64) -> Result<()> {
        let s = svd_thin(&self.v)?;
        let (first, last) = (
            s.singular_values[0],
            *s.singular_values.last().unwrap_or(&0.0),
        );
        if last < tol * first {
            let columns = (0..s.singular_values.len())
                .filter(|&k| s.singular_values[k] < tol * first)
                .collect();
            return Err(Error::RankDeficient { columns });
        }
        Ok(())
    }
}

/// Mass-normalized vibration modes, ascending in frequency.
pub fn vibration_modes(model: &dyn StructuralModel, n: usize) -> Result<ReductionBasis> {
    let pairs = eig_gsym(model.linear_stiffness(), model.mass(), n)?;
    let kinds = pairs
        .eigenvalues
        .iter()
        .map(|&omega_sq| ColumnKind::VibrationMode { omega_sq })
        .collect();
    ReductionBasis::new(pairs.vectors, kinds)
}

/// `M`-orthonormal basis of `span{K⁻¹F, (K⁻¹M)K⁻¹F, …}` with `n` vectors, or
/// fewer if the sequence becomes dependent.
pub fn krylov_modes(model: &dyn StructuralModel, f: &Vector, n: usize) -> Result<ReductionBasis> {
    let m = model.mass();
    if f.len() != model.dofs() {
        return Err(Error::dims("load vector length differs from the dof count"));
    }
    if n == 0 || f.amax() == 0.0 {
        return Err(Error::invalid(
            "Krylov basis needs n >= 1 and a nonzero load",
        ));
    }
    let factor = factor_spd(model.linear_stiffness())?;
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    let mut mcols: Vec<Vector> = Vec::with_capacity(n);
    let mut w = factor.solve(f);
    while cols.len() < n {
        let before = m.bilinear(&w, &w).sqrt();
        for _ in 0..2 {
            for (c, mc) in cols.iter().zip(&mcols) {
                let proj = mc.dot(&w);
                w.axpy(-proj, c, 1.0);
            }
        }
        let mw = m.mul_vec(&w);
        let norm = w.dot(&mw).max(0.0).sqrt();
        if norm <= 1e-10 * before {
            log::warn!(
                "Krylov sequence became dependent after {} vectors",
                cols.len()
            );
            break;
        }
        let v = w / norm;
        let mv = mw / norm;
        w = factor.solve(&mv);
        cols.push(v);
        mcols.push(mv);
    }
    let kinds = alloc::vec![ColumnKind::Krylov; cols.len()];
    ReductionBasis::new(Matrix::from_columns(&cols), kinds)
}

/// `⌈n/2⌉` Krylov vectors followed by `⌊n/2⌋` vibration modes, replaced by
/// the left singular vectors of the stack above `rho·σ₁`.
pub fn krylov_mode_mix(
    model: &dyn StructuralModel,
    f: &Vector,
    n: usize,
    rho: f64,
) -> Result<ReductionBasis> {
    let kry = krylov_modes(model, f, n.div_ceil(2))?;
    let mut cols: Vec<Vector> = kry.v.column_iter().map(|c| c.clone_owned()).collect();
    if n / 2 > 0 {
        let modes = vibration_modes(model, n / 2)?;
        cols.extend(modes.v.column_iter().map(|c| c.clone_owned()));
    }
    let s = svd_thin(&Matrix::from_columns(&cols))?;
    let m = s.rank(rho);
    Ok(ReductionBasis::other(s.u.columns(0, m).clone_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Forcing, Material};
    use crate::numerics::CsrMatrix;

    /// Linear chain exposed as a structural model.
    pub(crate) struct Chain {
        pub k: CsrMatrix,
        pub m: CsrMatrix,
        pub f: Vector,
        pub forcing: Forcing,
    }

    impl StructuralModel for Chain {
        fn dofs(&self) -> usize {
            self.k.nrows()
        }
        fn mass(&self) -> &CsrMatrix {
            &self.m
        }
        fn damping(&self) -> Option<&CsrMatrix> {
            None
        }
        fn linear_stiffness(&self) -> &CsrMatrix {
            &self.k
        }
        fn internal_force(&self, u: &Vector) -> Result<Vector> {
            Ok(self.k.mul_vec(u))
        }
        fn tangent_stiffness(&self, _u: &Vector) -> Result<CsrMatrix> {
            Ok(self.k.clone())
        }
        fn load_pattern(&self) -> &Vector {
            &self.f
        }
        fn forcing(&self) -> &Forcing {
            &self.forcing
        }
        fn characteristic_length(&self) -> f64 {
            1.0
        }
    }

    pub(crate) fn chain3() -> Chain {
        let k = Matrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 0.5]));
        Chain {
            k: CsrMatrix::from_dense(&k),
            m: CsrMatrix::from_dense(&m),
            f: Vector::from_vec(vec![0.0, 0.0, 1.0]),
            forcing: Forcing::constant(),
        }
    }

    #[test]
    fn first_krylov_vector_is_the_static_solution() {
        let c = chain3();
        let b = krylov_modes(&c, &c.f, 1).unwrap();
        let kv = c.k.mul_vec(&b.v.column(0).clone_owned());
        let ratio = kv[2] / c.f[2];
        assert!((kv - &c.f * ratio).norm() <= 1e-10 * c.f.norm() * ratio.abs());
    }

    #[test]
    fn krylov_span_matches_the_explicit_sequence() {
        let c = chain3();
        let b = krylov_modes(&c, &c.f, 2).unwrap();
        let kinv = c.k.to_dense().try_inverse().unwrap();
        let md = c.m.to_dense();
        let s1 = &kinv * &c.f;
        let s2 = &kinv * (&md * &s1);
        // principal angles via orthonormal bases of both spans
        let q1 = crate::numerics::orthonormal_columns(&Matrix::from_columns(&[s1, s2]))
            .columns(0, 2)
            .clone_owned();
        let q2 = crate::numerics::orthonormal_columns(&b.v)
            .columns(0, 2)
            .clone_owned();
        let cosines = svd_thin(&(q1.transpose() * q2)).unwrap().singular_values;
        for c in cosines {
            assert!((1.0 - c).abs() <= 1e-8);
        }
        let gram = b.v.transpose() * c.m.mul_dense(&b.v);
        assert!((gram - Matrix::identity(2, 2)).amax() <= 1e-8);
    }

    #[test]
    fn krylov_breakdown_returns_fewer_vectors() {
        let c = chain3();
        let b = krylov_modes(&c, &c.f, 5).unwrap();
        assert_eq!(b.len(), 3);
        assert!(krylov_modes(&c, &Vector::zeros(3), 1).is_err());
    }

    #[test]
    fn diagonal_modes() {
        let c = Chain {
            k: CsrMatrix::from_dense(&Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0]))),
            m: CsrMatrix::identity(2),
            f: Vector::zeros(2),
            forcing: Forcing::constant(),
        };
        let b = vibration_modes(&c, 2).unwrap();
        assert_eq!(b.eigenvalues().unwrap().len(), 2);
        assert!((b.eigenvalues().unwrap()[1] - 4.0).abs() < 1e-14);
        assert!(b.check_independent(1e-10).is_ok());
    }

    #[test]
    fn beam_krylov_basis_is_mass_orthonormal() {
        let mesh = crate::mesh::generate_beam_mesh(2.0, 0.05, 40, 2).unwrap();
        let model =
            crate::fem::FEModel::new(mesh, Material::aluminium(), &["left", "right"]).unwrap();
        let f = model
            .assemble_load_pattern("top", 5e5, [0.0, -1.0])
            .unwrap();
        let b = krylov_modes(&model, &f, 10).unwrap();
        assert_eq!(b.len(), 10);
        let gram = b.v.transpose() * model.mass().mul_dense(&b.v);
        assert!((gram - Matrix::identity(10, 10)).amax() <= 1e-8);
        let mix = krylov_mode_mix(&model, &f, 5, 1e-8).unwrap();
        assert_eq!(mix.len(), 5);
        assert!((mix.v.transpose() * &mix.v - Matrix::identity(5, 5)).amax() < 1e-10);
    }
}
