//! Static derivatives, static modal derivatives and modal derivatives.
//!
//! All of them need the stiffness derivative `∂K/∂q_j` in the direction of a
//! basis vector. It is obtained by central differences of the tangent
//! stiffness, so the second-order stiffness tensor is never formed.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{QuadTensor, ReductionBasis};
use crate::fem::StructuralModel;
use crate::numerics::{factor_spd, BorderedSolver, CsrMatrix};
use crate::{Error, Matrix, Result, Vector};

/// Step control for the stiffness derivative. The direction is scaled to
/// unit maximum entry and displaced by `h = delta · L_char`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdOptions {
    pub delta: f64,
    /// Repeat every difference with `h/2` and warn above 1e-4 relative change.
    pub richardson_check: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            richardson_check: false,
        }
    }
}

fn central(model: &dyn StructuralModel, dir: &Vector, h: f64) -> Result<CsrMatrix> {
    let kp = model.tangent_stiffness(&(dir * h))?;
    let km = model.tangent_stiffness(&(dir * -h))?;
    CsrMatrix::linear_combination(&[(0.5 / h, &kp), (-0.5 / h, &km)])
}

/// `∂K(q·v)/∂q` at `q = 0` by central differences.
pub fn stiffness_directional_derivative(
    model: &dyn StructuralModel,
    v: &Vector,
    opts: &FdOptions,
) -> Result<CsrMatrix> {
    let scale = v.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::invalid(
            "derivative direction must be nonzero and finite",
        ));
    }
    if !(opts.delta > 0.0) {
        return Err(Error::invalid("finite-difference delta must be positive"));
    }
    let dir = v / scale;
    let h = opts.delta * model.characteristic_length();
    let mut dk = central(model, &dir, h)?;
    if opts.richardson_check {
        let half = central(model, &dir, 0.5 * h)?;
        let mut diff = half.clone();
        diff.axpy(-1.0, &dk)?;
        let rel = diff.frobenius_norm() / half.frobenius_norm().max(f64::MIN_POSITIVE);
        if rel > 1e-4 {
            log::warn!("stiffness derivative changes by {rel:.2e} when the step is halved");
        }
    }
    dk.scale(scale);
    Ok(dk)
}

fn derivative_set(
    model: &dyn StructuralModel,
    v: &Matrix,
    opts: &FdOptions,
) -> Result<Vec<CsrMatrix>> {
    if v.nrows() != model.dofs() {
        return Err(Error::dims("basis rows differ from the dof count"));
    }
    v.column_iter()
        .map(|c| stiffness_directional_derivative(model, &c.clone_owned(), opts))
        .collect()
}

/// Static derivatives `K θ_ij = −(∂K/∂q_j) v_i` for `i ≤ j`, from one
/// factorization and `n` stiffness derivatives.
pub fn static_derivatives(
    model: &dyn StructuralModel,
    v: &Matrix,
    opts: &FdOptions,
) -> Result<QuadTensor> {
    let n = v.ncols();
    let factor = factor_spd(model.linear_stiffness())?;
    let mut theta = QuadTensor::zeros(model.dofs(), n);
    for j in 0..n {
        let dk = stiffness_directional_derivative(model, &v.column(j).clone_owned(), opts)?;
        for i in 0..=j {
            let rhs = -dk.mul_vec(&v.column(i).clone_owned());
            theta.set_column(i, j, &factor.solve(&rhs));
        }
    }
    Ok(theta)
}

/// Every ordered pair: entry `[i][j]` solves `K θ = −(∂K/∂q_j) v_i`.
pub fn static_derivative_pairs(
    model: &dyn StructuralModel,
    v: &Matrix,
    opts: &FdOptions,
) -> Result<Vec<Vec<Vector>>> {
    let factor = factor_spd(model.linear_stiffness())?;
    let dks = derivative_set(model, v, opts)?;
    Ok((0..v.ncols())
        .map(|i| {
            let vi = v.column(i).clone_owned();
            dks.iter()
                .map(|dk| factor.solve(&-dk.mul_vec(&vi)))
                .collect()
        })
        .collect())
}

fn require_modes(modes: &ReductionBasis) -> Result<Vec<f64>> {
    modes
        .eigenvalues()
        .ok_or_else(|| Error::invalid("basis columns must all be vibration modes"))
}

/// Static derivatives of a vibration-mode basis.
pub fn static_modal_derivatives(
    model: &dyn StructuralModel,
    modes: &ReductionBasis,
    opts: &FdOptions,
) -> Result<QuadTensor> {
    require_modes(modes)?;
    static_derivatives(model, &modes.v, opts)
}

/// Unsymmetrized `∂φ_i/∂q_j` for all ordered pairs, with `φ_iᵀM ∂φ_i/∂q_j = 0`.
pub(crate) fn raw_modal_derivatives(
    model: &dyn StructuralModel,
    modes: &ReductionBasis,
    opts: &FdOptions,
) -> Result<Vec<Vec<Vector>>> {
    let lambda = require_modes(modes)?;
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]));
    for w in order.windows(2) {
        let (a, b) = (lambda[w[0]], lambda[w[1]]);
        let gap = (b - a).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE);
        if gap < 1e-6 {
            return Err(Error::DegenerateModes {
                first: w[0],
                second: w[1],
                gap,
            });
        }
    }
    let (k0, m) = (model.linear_stiffness(), model.mass());
    let dks = derivative_set(model, &modes.v, opts)?;
    let mut out = Vec::with_capacity(lambda.len());
    for (i, &lam) in lambda.iter().enumerate() {
        let phi = modes.v.column(i).clone_owned();
        let m_phi = m.mul_vec(&phi);
        let a = CsrMatrix::linear_combination(&[(1.0, k0), (-lam, m)])?;
        let solver = BorderedSolver::new(&a, &phi, &m_phi)?;
        let mut row = Vec::with_capacity(dks.len());
        for dk in &dks {
            let dk_phi = dk.mul_vec(&phi);
            let dlam = phi.dot(&dk_phi);
            let rhs = -(dk_phi - &m_phi * dlam);
            row.push(solver.solve(&rhs)?.x);
        }
        out.push(row);
    }
    Ok(out)
}

/// Modal derivatives from the bordered singular systems, symmetrized as
/// `θ_ij = ½(∂φ_i/∂q_j + ∂φ_j/∂q_i)`.
pub fn modal_derivatives(
    model: &dyn StructuralModel,
    modes: &ReductionBasis,
    opts: &FdOptions,
) -> Result<QuadTensor> {
    let raw = raw_modal_derivatives(model, modes, opts)?;
    let n = raw.len();
    let mut theta = QuadTensor::zeros(model.dofs(), n);
    for i in 0..n {
        for j in i..n {
            theta.set_column(i, j, &((&raw[i][j] + &raw[j][i]) * 0.5));
        }
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::super::tests::chain3;
    use super::super::vibration_modes;
    use super::*;
    use crate::fem::{Forcing, Material, VkBeamModel, VkSupport};
    use core::sync::atomic::{AtomicUsize, Ordering};
    use nalgebra::SymmetricEigen;

    /// Two dofs with `f = Ku + c(u₁ − u₂)²·[1, −1] + a·[u₁², 0]`.
    struct Toy {
        k: CsrMatrix,
        m: CsrMatrix,
        c: f64,
        a: f64,
        f: Vector,
        forcing: Forcing,
        assemblies: AtomicUsize,
    }

    impl Toy {
        fn new(c: f64, a: f64) -> Self {
            Self {
                k: CsrMatrix::from_dense(&Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])),
                m: CsrMatrix::identity(2),
                c,
                a,
                f: Vector::zeros(2),
                forcing: Forcing::constant(),
                assemblies: AtomicUsize::new(0),
            }
        }
    }

    impl StructuralModel for Toy {
        fn dofs(&self) -> usize {
            2
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
            let d = u[0] - u[1];
            let mut f = self.k.mul_vec(u);
            f[0] += self.c * d * d + self.a * u[0] * u[0];
            f[1] -= self.c * d * d;
            Ok(f)
        }
        fn tangent_stiffness(&self, u: &Vector) -> Result<CsrMatrix> {
            self.assemblies.fetch_add(1, Ordering::Relaxed);
            let d = 2.0 * self.c * (u[0] - u[1]);
            let mut k = self.k.to_dense();
            k[(0, 0)] += d + 2.0 * self.a * u[0];
            k[(0, 1)] -= d;
            k[(1, 0)] -= d;
            k[(1, 1)] += d;
            Ok(CsrMatrix::from_dense(&k))
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

    #[test]
    fn two_dof_static_derivative_closed_form() {
        let toy = Toy::new(0.0, 1.0);
        let v = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let theta = static_derivatives(&toy, &v, &FdOptions::default()).unwrap();
        let t = theta.column(0, 0);
        assert!(
            (t[0] + 4.0 / 3.0).abs() < 1e-9 && (t[1] + 2.0 / 3.0).abs() < 1e-9,
            "{t}"
        );
    }

    #[test]
    fn assembly_count_is_two_per_basis_vector() {
        let toy = Toy::new(0.7, 0.2);
        let v = Matrix::from_row_slice(2, 2, &[1.0, 0.3, -0.5, 1.0]);
        toy.assemblies.store(0, Ordering::Relaxed);
        static_derivatives(&toy, &v, &FdOptions::default()).unwrap();
        assert_eq!(toy.assemblies.load(Ordering::Relaxed), 4);
    }

    #[test]
    fn linear_models_have_vanishing_derivatives() {
        let c = chain3();
        let modes = vibration_modes(&c, 2).unwrap();
        let opts = FdOptions::default();
        assert_eq!(
            static_modal_derivatives(&c, &modes, &opts).unwrap().norm(),
            0.0
        );
        assert_eq!(modal_derivatives(&c, &modes, &opts).unwrap().norm(), 0.0);
    }

    #[test]
    fn modes_are_required_for_modal_variants() {
        let c = chain3();
        let basis = ReductionBasis::other(Matrix::identity(3, 2));
        assert!(static_modal_derivatives(&c, &basis, &FdOptions::default()).is_err());
    }

    #[test]
    fn modal_derivative_matches_perturbed_eigenproblems() {
        let toy = Toy::new(0.7, 0.4);
        let modes = vibration_modes(&toy, 2).unwrap();
        let raw = raw_modal_derivatives(&toy, &modes, &FdOptions::default()).unwrap();
        let eps = 1e-4;
        for j in 0..2 {
            let phi_j = modes.v.column(j).clone_owned();
            let perturbed = |q: f64| {
                let k = toy.tangent_stiffness(&(&phi_j * q)).unwrap().to_dense();
                let e = SymmetricEigen::new(k);
                let mut idx = [0, 1];
                idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
                idx.map(|c| e.eigenvectors.column(c).clone_owned())
            };
            let (plus, minus) = (perturbed(eps), perturbed(-eps));
            for i in 0..2 {
                let phi_i = modes.v.column(i).clone_owned();
                let align = |v: &Vector| if v.dot(&phi_i) < 0.0 { -v } else { v.clone() };
                let fd = (align(&plus[i]) - align(&minus[i])) / (2.0 * eps);
                assert!(
                    (&fd - &raw[i][j]).norm() <= 1e-6 * (1.0 + fd.norm()),
                    "pair {i} {j}"
                );
            }
        }
    }

    #[test]
    fn modal_derivative_solvability() {
        let toy = Toy::new(0.7, 0.4);
        let modes = vibration_modes(&toy, 2).unwrap();
        let opts = FdOptions::default();
        for i in 0..2 {
            let phi = modes.v.column(i).clone_owned();
            for j in 0..2 {
                let dk =
                    stiffness_directional_derivative(&toy, &modes.v.column(j).clone_owned(), &opts)
                        .unwrap();
                let dkp = dk.mul_vec(&phi);
                let rhs = -(&dkp - toy.m.mul_vec(&phi) * phi.dot(&dkp));
                assert!(phi.dot(&rhs).abs() <= 1e-8 * rhs.norm().max(1e-300));
            }
        }
        let theta = modal_derivatives(&toy, &modes, &opts).unwrap();
        assert!(theta.norm() > 0.0);
    }

    #[test]
    fn degenerate_modes_are_rejected() {
        let c = chain3();
        let v = Matrix::identity(3, 2);
        let kinds = vec![
            super::super::ColumnKind::VibrationMode { omega_sq: 1.0 },
            super::super::ColumnKind::VibrationMode {
                omega_sq: 1.0 + 1e-9,
            },
        ];
        let basis = ReductionBasis::new(v, kinds).unwrap();
        assert!(matches!(
            modal_derivatives(&c, &basis, &FdOptions::default()),
            Err(Error::DegenerateModes { .. })
        ));
    }

    #[test]
    fn von_karman_derivative_structure() {
        let model = VkBeamModel::new(
            2.0,
            0.05,
            10,
            &Material::aluminium(),
            VkSupport::ClampedClamped,
        )
        .unwrap();
        let (ax, tr) = (model.axial_dofs(), model.transverse_dofs());
        let kmax = model.linear_stiffness().max_abs();
        let block = |k: &CsrMatrix, r: &[usize], c: &[usize]| {
            r.iter()
                .flat_map(|&i| c.iter().map(move |&j| (i, j)))
                .map(|(i, j)| k.get(i, j).abs())
                .fold(0.0, f64::max)
        };
        let opts = FdOptions::default();

        let mut v = Vector::zeros(model.dofs());
        for &i in &tr {
            v[i] = (0.4 * i as f64).sin();
        }
        let dk = stiffness_directional_derivative(&model, &v, &opts).unwrap();
        assert!(block(&dk, &ax, &ax) <= 1e-8 * kmax);
        assert!(block(&dk, &tr, &tr) <= 1e-8 * kmax);
        assert!(block(&dk, &ax, &tr) > 1e-6 * kmax);

        let mut v = Vector::zeros(model.dofs());
        for &i in &ax {
            v[i] = (0.4 * i as f64).sin();
        }
        let dk = stiffness_directional_derivative(&model, &v, &opts).unwrap();
        assert!(block(&dk, &ax, &ax) <= 1e-8 * kmax);
        assert!(block(&dk, &ax, &tr) <= 1e-8 * kmax);
    }

    #[test]
    fn central_difference_is_exact_for_quadratic_tangents() {
        let mesh = crate::mesh::generate_beam_mesh(2.0, 0.05, 8, 2).unwrap();
        let model =
            crate::fem::FEModel::new(mesh, Material::aluminium(), &["left", "right"]).unwrap();
        let v = Vector::from_fn(model.dofs(), |i, _| (0.3 * i as f64).sin());
        let a = stiffness_directional_derivative(
            &model,
            &v,
            &FdOptions {
                delta: 1e-4,
                richardson_check: false,
            },
        )
        .unwrap();
        let b = stiffness_directional_derivative(
            &model,
            &v,
            &FdOptions {
                delta: 5e-5,
                richardson_check: true,
            },
        )
        .unwrap();
        let mut d = a.clone();
        d.axpy(-1.0, &b).unwrap();
        assert!(d.frobenius_norm() <= 1e-6 * a.frobenius_norm());
        assert!(a.asymmetry() <= 1e-10 * a.max_abs());
    }
}
