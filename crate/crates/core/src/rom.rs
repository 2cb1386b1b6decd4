//! Full and reduced second-order systems.
//!
//! A [`ReducedModel`] projects the equation of motion either onto a fixed
//! basis `V` or onto the tangent space `P_Γ = V + Θz` of the quadratic
//! manifold `u = Γ(z) = Vz + ½Θzz`. Both kinds, and the full model itself,
//! implement [`SecondOrderSystem`] so the same integrator drives all of them.

use alloc::format;
use alloc::string::String;
#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::QuadTensor;
use crate::fem::StructuralModel;
use crate::integrate::{Evaluation, NewtonEval, NewtonProblem, SecondOrderSystem, Weights};
use crate::numerics::{svd_thin, CsrMatrix};
use crate::{Error, Matrix, Result, Vector};

/// Relative smallest singular value of `P_Γ` below which a step is flagged.
pub const TANGENT_RANK_TOL: f64 = 1e-8;

/// The map `Γ(z) = Vz + ½Θzz`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticManifold {
    v: Matrix,
    theta: QuadTensor,
}

impl QuadraticManifold {
    pub fn new(v: Matrix, theta: QuadTensor) -> Result<Self> {
        if theta.dofs() != v.nrows() || theta.n() != v.ncols() {
            return Err(Error::dims("tensor shape differs from the basis"));
        }
        Ok(Self { v, theta })
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn theta(&self) -> &QuadTensor {
        &self.theta
    }

    pub fn n(&self) -> usize {
        self.v.ncols()
    }

    pub fn dofs(&self) -> usize {
        self.v.nrows()
    }

    fn check(&self, z: &Vector) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::dims(
                "reduced vector length differs from the manifold dimension",
            ));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite reduced state"));
        }
        Ok(())
    }

    /// `Γ(z)`.
    pub fn map(&self, z: &Vector) -> Result<Vector> {
        self.check(z)?;
        Ok(&self.v * z + self.theta.contract2(z, z)? * 0.5)
    }

    /// `P_Γ(z) = V + Θz`.
    pub fn tangent(&self, z: &Vector) -> Result<Matrix> {
        self.check(z)?;
        Ok(&self.v + self.theta.contract1(z)?)
    }

    /// `Θżż`.
    pub fn curvature(&self, zd: &Vector) -> Result<Vector> {
        self.check(zd)?;
        self.theta.contract2(zd, zd)
    }

    /// `(Γ(z), P_Γ(z))`.
    pub fn evaluate(&self, z: &Vector) -> Result<(Vector, Matrix)> {
        Ok((self.map(z)?, self.tangent(z)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    /// `u = Vq` with the linear stiffness only.
    Linearized(Matrix),
    /// `u = Vq`.
    Linear(Matrix),
    Quadratic(QuadraticManifold),
}

impl Reduction {
    pub fn size(&self) -> usize {
        match self {
            Reduction::Linearized(v) | Reduction::Linear(v) => v.ncols(),
            Reduction::Quadratic(q) => q.n(),
        }
    }

    pub fn dofs(&self) -> usize {
        match self {
            Reduction::Linearized(v) | Reduction::Linear(v) => v.nrows(),
            Reduction::Quadratic(q) => q.dofs(),
        }
    }

    pub fn lift(&self, z: &Vector) -> Result<Vector> {
        match self {
            Reduction::Linearized(v) | Reduction::Linear(v) => {
                if z.len() != v.ncols() {
                    return Err(Error::dims(
                        "reduced vector length differs from the basis size",
                    ));
                }
                Ok(v * z)
            }
            Reduction::Quadratic(q) => q.map(z),
        }
    }
}

/// Exact partial derivatives of the reduced residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedJacobians {
    /// `∂r/∂z̈`.
    pub acceleration: Matrix,
    /// `∂r/∂ż`.
    pub velocity: Matrix,
    /// `∂r/∂z`.
    pub displacement: Matrix,
}

/// Jacobian blocks split into inertia and force contributions.
struct Blocks {
    acc: Matrix,
    vel_inertia: Option<Matrix>,
    vel_force: Option<Matrix>,
    disp_inertia: Option<Matrix>,
    disp_force: Matrix,
}

impl Blocks {
    fn combine(self, w: &Weights) -> Matrix {
        let mut out = self.acc * w.acceleration + self.disp_force * (w.displacement * w.force);
        if let Some(m) = self.vel_inertia {
            out += m * w.velocity;
        }
        if let Some(m) = self.vel_force {
            out += m * (w.velocity * w.force);
        }
        if let Some(m) = self.disp_inertia {
            out += m * w.displacement;
        }
        out
    }

    fn jacobians(self) -> ReducedJacobians {
        let n = self.acc.nrows();
        let sum = |a: Option<Matrix>, b: Option<Matrix>| {
            a.unwrap_or_else(|| Matrix::zeros(n, n)) + b.unwrap_or_else(|| Matrix::zeros(n, n))
        };
        ReducedJacobians {
            velocity: sum(self.vel_inertia, self.vel_force),
            displacement: sum(self.disp_inertia, Some(self.disp_force)),
            acceleration: self.acc,
        }
    }
}

struct Terms {
    inertia: Vector,
    force: Vector,
    magnitude: f64,
    blocks: Option<Blocks>,
}

/// Reduced model over a borrowed structural model.
pub struct ReducedModel<'a> {
    model: &'a dyn StructuralModel,
    reduction: Reduction,
    /// `VᵀMV`, `VᵀCV` and `VᵀK₀V` for the fixed-basis variants.
    mass: Option<Matrix>,
    damping: Option<Matrix>,
    stiffness: Option<Matrix>,
}

fn project(a: &CsrMatrix, v: &Matrix) -> Matrix {
    v.tr_mul(&a.mul_dense(v))
}

impl<'a> ReducedModel<'a> {
    pub fn new(model: &'a dyn StructuralModel, reduction: Reduction) -> Result<Self> {
        if reduction.dofs() != model.dofs() {
            return Err(Error::dims(
                "reduction rows differ from the model dof count",
            ));
        }
        if reduction.size() == 0 {
            return Err(Error::invalid("empty reduction"));
        }
        let (mass, damping, stiffness) = match &reduction {
            Reduction::Linearized(v) | Reduction::Linear(v) => (
                Some(project(model.mass(), v)),
                model.damping().map(|c| project(c, v)),
                matches!(reduction, Reduction::Linearized(_))
                    .then(|| project(model.linear_stiffness(), v)),
            ),
            Reduction::Quadratic(_) => (None, None, None),
        };
        Ok(Self {
            model,
            reduction,
            mass,
            damping,
            stiffness,
        })
    }

    pub fn linear(model: &'a dyn StructuralModel, v: Matrix) -> Result<Self> {
        Self::new(model, Reduction::Linear(v))
    }

    pub fn linearized(model: &'a dyn StructuralModel, v: Matrix) -> Result<Self> {
        Self::new(model, Reduction::Linearized(v))
    }

    pub fn quadratic(model: &'a dyn StructuralModel, manifold: QuadraticManifold) -> Result<Self> {
        Self::new(model, Reduction::Quadratic(manifold))
    }

    pub fn model(&self) -> &'a dyn StructuralModel {
        self.model
    }

    pub fn reduction(&self) -> &Reduction {
        &self.reduction
    }

    pub fn size(&self) -> usize {
        self.reduction.size()
    }

    fn check(&self, z: &Vector, zd: &Vector, zdd: &Vector) -> Result<()> {
        let n = self.size();
        if z.len() != n || zd.len() != n || zdd.len() != n {
            return Err(Error::dims(
                "reduced state length differs from the model size",
            ));
        }
        if z.iter()
            .chain(zd.iter())
            .chain(zdd.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::invalid("non-finite reduced state"));
        }
        Ok(())
    }

    fn terms(
        &self,
        z: &Vector,
        zd: &Vector,
        zdd: &Vector,
        load: &Vector,
        jac: bool,
    ) -> Result<Terms> {
        self.check(z, zd, zdd)?;
        if load.len() != self.model.dofs() {
            return Err(Error::dims("load length differs from the dof count"));
        }
        match &self.reduction {
            Reduction::Linearized(v) | Reduction::Linear(v) => {
                self.linear_terms(v, z, zd, zdd, load, jac)
            }
            Reduction::Quadratic(q) => self.quadratic_terms(q, z, zd, zdd, load, jac),
        }
    }

    fn linear_terms(
        &self,
        v: &Matrix,
        z: &Vector,
        zd: &Vector,
        zdd: &Vector,
        load: &Vector,
        jac: bool,
    ) -> Result<Terms> {
        let mass = self.mass.as_ref().expect("fixed basis has a reduced mass");
        let inertia = mass * zdd;
        let damp = self.damping.as_ref().map(|c| c * zd);
        let ext = v.tr_mul(load);
        let (internal, k) = match &self.stiffness {
            Some(k0) => (k0 * z, jac.then(|| k0.clone())),
            None => {
                let u = v * z;
                if jac {
                    let (f, k) = self.model.force_and_stiffness(&u)?;
                    (v.tr_mul(&f), Some(project(&k, v)))
                } else {
                    (v.tr_mul(&self.model.internal_force(&u)?), None)
                }
            }
        };
        let magnitude = [
            inertia.norm(),
            internal.norm(),
            ext.norm(),
            damp.as_ref().map_or(0.0, |d| d.norm()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let mut force = internal - ext;
        if let Some(d) = damp {
            force += d;
        }
        let blocks = k.map(|disp_force| Blocks {
            acc: mass.clone(),
            vel_inertia: None,
            vel_force: self.damping.clone(),
            disp_inertia: None,
            disp_force,
        });
        Ok(Terms {
            inertia,
            force,
            magnitude,
            blocks,
        })
    }

    fn quadratic_terms(
        &self,
        q: &QuadraticManifold,
        z: &Vector,
        zd: &Vector,
        zdd: &Vector,
        load: &Vector,
        jac: bool,
    ) -> Result<Terms> {
        let (m, c) = (self.model.mass(), self.model.damping());
        let theta = q.theta();
        let u = q.map(z)?;
        let p = q.tangent(z)?;
        let theta_zd = theta.contract1(zd)?;
        let theta_zdd = theta.contract1(zdd)?;
        let convective = theta.contract2(zd, zd)?;

        let (f, k) = if jac {
            let (f, k) = self.model.force_and_stiffness(&u)?;
            (f, Some(k))
        } else {
            (self.model.internal_force(&u)?, None)
        };
        let w_inertia = m.mul_vec(&(&p * zdd + &convective));
        let damp = c.map(|c| c.mul_vec(&(&p * zd)));
        let mut w_force = &f - load;
        if let Some(d) = &damp {
            w_force += d;
        }
        let inertia = p.tr_mul(&w_inertia);
        let force = p.tr_mul(&w_force);
        let magnitude = [
            w_inertia.norm(),
            f.norm(),
            load.norm(),
            damp.as_ref().map_or(0.0, |d| d.norm()),
        ]
        .into_iter()
        .fold(0.0, f64::max);

        let blocks = match k {
            None => None,
            Some(k) => {
                let mp = m.mul_dense(&p);
                let mut disp_force = theta.project(&w_force) + p.tr_mul(&k.mul_dense(&p));
                let vel_force = c.map(|c| {
                    disp_force += p.tr_mul(&c.mul_dense(&theta_zd));
                    p.tr_mul(&c.mul_dense(&p))
                });
                Some(Blocks {
                    acc: p.tr_mul(&mp),
                    vel_inertia: Some(mp.tr_mul(&theta_zd) * 2.0),
                    vel_force,
                    disp_inertia: Some(theta.project(&w_inertia) + mp.tr_mul(&theta_zdd)),
                    disp_force,
                })
            }
        };
        Ok(Terms {
            inertia,
            force,
            magnitude,
            blocks,
        })
    }

    /// Reduced residual at time `t`.
    pub fn residual(&self, z: &Vector, zd: &Vector, zdd: &Vector, t: f64) -> Result<Vector> {
        let load = self.model.external_force(t);
        let terms = self.terms(z, zd, zdd, &load, false)?;
        Ok(terms.inertia + terms.force)
    }

    /// Exact `∂r/∂z̈`, `∂r/∂ż` and `∂r/∂z` at time `t`.
    pub fn jacobians(
        &self,
        z: &Vector,
        zd: &Vector,
        zdd: &Vector,
        t: f64,
    ) -> Result<ReducedJacobians> {
        let load = self.model.external_force(t);
        let terms = self.terms(z, zd, zdd, &load, true)?;
        Ok(terms.blocks.expect("requested").jacobians())
    }

    pub fn lift(&self, z: &Vector) -> Result<Vector> {
        self.reduction.lift(z)
    }

    /// `σ_min/σ_max` of the projector at `z`.
    pub fn tangent_conditioning(&self, z: &Vector) -> Result<f64> {
        let p = match &self.reduction {
            Reduction::Quadratic(q) => q.tangent(z)?,
            Reduction::Linear(v) | Reduction::Linearized(v) => v.clone(),
        };
        let s = svd_thin(&p)?.singular_values;
        let (first, last) = (s[0], *s.last().unwrap_or(&0.0));
        Ok(if first > 0.0 { last / first } else { 0.0 })
    }

    /// Reduced statics `P_Γᵀ(f(Γ(z)) − load) = 0`.
    pub fn static_problem(&self, load: Vector) -> StaticProblem<'_, 'a> {
        StaticProblem { model: self, load }
    }
}

impl SecondOrderSystem for ReducedModel<'_> {
    type Matrix = Matrix;

    fn size(&self) -> usize {
        self.reduction.size()
    }

    fn evaluate(
        &self,
        q: &Vector,
        qd: &Vector,
        qdd: &Vector,
        t: f64,
        weights: Option<&Weights>,
    ) -> Result<Evaluation<Matrix>> {
        let load = self.model.external_force(t);
        let terms = self.terms(q, qd, qdd, &load, weights.is_some())?;
        let matrix = weights.map(|w| terms.blocks.expect("requested").combine(w));
        Ok(Evaluation {
            inertia: terms.inertia,
            force: terms.force,
            magnitude: terms.magnitude,
            matrix,
        })
    }

    fn lift(&self, q: &Vector) -> Vector {
        self.reduction
            .lift(q)
            .expect("accepted states are finite and sized")
    }

    fn characteristic_length(&self) -> f64 {
        self.model.characteristic_length()
    }

    fn inspect(&self, q: &Vector) -> Option<String> {
        if !matches!(self.reduction, Reduction::Quadratic(_)) {
            return None;
        }
        match self.tangent_conditioning(q) {
            Ok(r) if r >= TANGENT_RANK_TOL => None,
            Ok(r) => Some(format!(
                "ill-conditioned tangent projector (sigma_min/sigma_max = {r:.2e})"
            )),
            Err(e) => Some(format!("tangent projector check failed: {e}")),
        }
    }
}

/// Newton problem for reduced statics under a fixed load.
pub struct StaticProblem<'r, 'a> {
    model: &'r ReducedModel<'a>,
    load: Vector,
}

impl NewtonProblem for StaticProblem<'_, '_> {
    type Matrix = Matrix;

    fn evaluate(&mut self, z: &Vector) -> Result<NewtonEval<Matrix>> {
        let zero = Vector::zeros(z.len());
        let terms = self.model.terms(z, &zero, &zero, &self.load, true)?;
        let matrix = terms.blocks.expect("requested").disp_force;
        Ok(NewtonEval {
            residual: terms.force,
            matrix,
            scale: terms.magnitude,
        })
    }
}

/// The unreduced model, optionally with its internal force linearized.
pub struct FullSystem<'a> {
    model: &'a dyn StructuralModel,
    linearized: bool,
}

impl<'a> FullSystem<'a> {
    pub fn nonlinear(model: &'a dyn StructuralModel) -> Self {
        Self {
            model,
            linearized: false,
        }
    }

    pub fn linearized(model: &'a dyn StructuralModel) -> Self {
        Self {
            model,
            linearized: true,
        }
    }

    pub fn is_linearized(&self) -> bool {
        self.linearized
    }

    fn internal(&self, q: &Vector, jac: bool) -> Result<(Vector, Option<CsrMatrix>)> {
        if self.linearized {
            crate::fem::check_state(q, self.model.dofs())?;
            let k0 = self.model.linear_stiffness();
            return Ok((k0.mul_vec(q), jac.then(|| k0.clone())));
        }
        if jac {
            let (f, k) = self.model.force_and_stiffness(q)?;
            Ok((f, Some(k)))
        } else {
            Ok((self.model.internal_force(q)?, None))
        }
    }

    /// Statics `f(u) − load = 0`.
    pub fn static_problem(&self, load: Vector) -> FullStaticProblem<'_, 'a> {
        FullStaticProblem { system: self, load }
    }
}

impl SecondOrderSystem for FullSystem<'_> {
    type Matrix = CsrMatrix;

    fn size(&self) -> usize {
        self.model.dofs()
    }

    fn evaluate(
        &self,
        q: &Vector,
        qd: &Vector,
        qdd: &Vector,
        t: f64,
        weights: Option<&Weights>,
    ) -> Result<Evaluation<CsrMatrix>> {
        let n = self.model.dofs();
        if qd.len() != n || qdd.len() != n {
            return Err(Error::dims("state length differs from the dof count"));
        }
        let m = self.model.mass();
        let (f, k) = self.internal(q, weights.is_some())?;
        let inertia = m.mul_vec(qdd);
        let ext = self.model.external_force(t);
        let damp = self.model.damping().map(|c| c.mul_vec(qd));
        let magnitude = [
            inertia.norm(),
            f.norm(),
            ext.norm(),
            damp.as_ref().map_or(0.0, |d| d.norm()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let mut force = f - ext;
        if let Some(d) = damp {
            force += d;
        }
        let matrix = match (weights, k) {
            (Some(w), Some(k)) => {
                let mut terms = alloc::vec![(w.acceleration, m), (w.displacement * w.force, &k)];
                if let Some(c) = self.model.damping() {
                    terms.push((w.velocity * w.force, c));
                }
                Some(CsrMatrix::linear_combination(&terms)?)
            }
            _ => None,
        };
        Ok(Evaluation {
            inertia,
            force,
            magnitude,
            matrix,
        })
    }

    fn lift(&self, q: &Vector) -> Vector {
        q.clone()
    }

    fn characteristic_length(&self) -> f64 {
        self.model.characteristic_length()
    }
}

pub struct FullStaticProblem<'s, 'a> {
    system: &'s FullSystem<'a>,
    load: Vector,
}

impl NewtonProblem for FullStaticProblem<'_, '_> {
    type Matrix = CsrMatrix;

    fn evaluate(&mut self, u: &Vector) -> Result<NewtonEval<CsrMatrix>> {
        let (f, k) = self.system.internal(u, true)?;
        let scale = f.norm().max(self.load.norm());
        Ok(NewtonEval {
            residual: f - &self.load,
            matrix: k.expect("requested"),
            scale,
        })
    }
}
