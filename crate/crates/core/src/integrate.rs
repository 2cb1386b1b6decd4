//! HHT-α time integration with Newton iterations.
//!
//! Every system is written as `r = r_I(q, q̇, q̈) + r_F(q, q̇, t) = 0`, where
//! `r_I` collects the inertia terms and `r_F` the damping, internal and
//! external forces. The HHT-α step evaluates `r_I` at `t_{n+1}` and blends
//! `r_F` as `(1−α)·r_F(t_{n+1}) + α·r_F(t_n)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::fem::Forcing;
use crate::numerics::LinearSolve;
use crate::{Error, Matrix, Result, Vector};

/// Coefficients of the iteration matrix
/// `a·∂r_I/∂q̈ + v·(∂r_I/∂q̇ + w·∂r_F/∂q̇) + d·(∂r_I/∂q + w·∂r_F/∂q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub acceleration: f64,
    pub velocity: f64,
    pub displacement: f64,
    pub force: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation<J> {
    pub inertia: Vector,
    pub force: Vector,
    /// Size of the largest individual term, used to scale tolerances.
    pub magnitude: f64,
    pub matrix: Option<J>,
}

/// Semi-discrete second-order system in generalized coordinates `q`.
pub trait SecondOrderSystem {
    type Matrix: LinearSolve;

    fn size(&self) -> usize;

    /// Residual split and, when `weights` is given, the iteration matrix.
    fn evaluate(
        &self,
        q: &Vector,
        qd: &Vector,
        qdd: &Vector,
        t: f64,
        weights: Option<&Weights>,
    ) -> Result<Evaluation<Self::Matrix>>;

    /// Full-space displacement for the generalized coordinates.
    fn lift(&self, q: &Vector) -> Vector;

    /// Bounding-box diagonal of the structure.
    fn characteristic_length(&self) -> f64;

    /// Called after every accepted step; a message is kept as a diagnostic.
    fn inspect(&self, _q: &Vector) -> Option<String> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_iter: 20,
        }
    }
}

pub struct NewtonEval<J> {
    pub residual: Vector,
    pub matrix: J,
    /// Force scale entering the relative tolerance next to `‖r₀‖`.
    pub scale: f64,
}

/// Nonlinear system `r(x) = 0` with its Jacobian.
pub trait NewtonProblem {
    type Matrix: LinearSolve;
    fn evaluate(&mut self, x: &Vector) -> Result<NewtonEval<Self::Matrix>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vector,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// `‖r‖` at every evaluated iterate, starting with the initial guess.
    pub residuals: Vec<f64>,
    /// `None` on convergence.
    pub failure: Option<String>,
}

impl NewtonReport {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }

    /// Estimated order `log(e_{k+1}/e_k) / log(e_k/e_{k−1})` from the last
    /// three residual norms above the roundoff floor `1e4·ε·‖r₀‖`.
    pub fn observed_order(&self) -> Option<f64> {
        let floor = 1e4 * f64::EPSILON * self.residuals.first().copied()?;
        let r: Vec<f64> = self
            .residuals
            .iter()
            .copied()
            .filter(|&v| v > floor)
            .collect();
        if r.len() < 3 {
            return None;
        }
        let (a, b, c) = (r[r.len() - 3], r[r.len() - 2], r[r.len() - 1]);
        let order = (c / b).ln() / (b / a).ln();
        order.is_finite().then_some(order)
    }
}

/// Full-step Newton; converged once `‖r‖ ≤ max(abs_tol, rel_tol·max(‖r₀‖, scale))`.
pub fn newton_solve<P: NewtonProblem + ?Sized>(
    problem: &mut P,
    x0: &Vector,
    opts: &NewtonOptions,
) -> NewtonReport {
    let mut x = x0.clone();
    let mut residuals = Vec::new();
    let mut tol = None;
    let mut iterations = 0;
    let fail = |x: Vector, iterations, residuals, reason: String| NewtonReport {
        x,
        iterations,
        residuals,
        failure: Some(reason),
    };
    loop {
        let eval = match problem.evaluate(&x) {
            Ok(e) => e,
            Err(e) => return fail(x, iterations, residuals, e.to_string()),
        };
        let norm = eval.residual.norm();
        residuals.push(norm);
        if !norm.is_finite() {
            return fail(x, iterations, residuals, "non-finite residual".to_string());
        }
        let tol = *tol.get_or_insert_with(|| opts.abs_tol.max(opts.rel_tol * norm.max(eval.scale)));
        if norm <= tol {
            return NewtonReport {
                x,
                iterations,
                residuals,
                failure: None,
            };
        }
        if iterations >= opts.max_iter {
            return fail(
                x,
                iterations,
                residuals,
                "Newton iteration limit reached".to_string(),
            );
        }
        let dx = match eval.matrix.solve_system(&eval.residual) {
            Ok(dx) => dx,
            Err(_) => {
                return fail(
                    x,
                    iterations,
                    residuals,
                    "singular iteration matrix".to_string(),
                )
            }
        };
        x -= dx;
        iterations += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Numerical damping in `[0, 1/3]`.
    pub alpha: f64,
    /// s.
    pub dt: f64,
    /// s.
    pub t_end: f64,
    /// s; an integer multiple of `dt`.
    pub dt_save: f64,
    pub newton: NewtonOptions,
    /// Divergence once `‖u‖_∞` exceeds this factor times the bounding-box diagonal.
    pub divergence_factor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            dt: 1e-4,
            t_end: 0.2,
            dt_save: 1e-4,
            newton: NewtonOptions::default(),
            divergence_factor: 1e3,
        }
    }
}

impl IntegratorConfig {
    /// Number of time steps and steps per saved state.
    pub fn schedule(&self) -> Result<(usize, usize)> {
        if !(0.0..=1.0 / 3.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha must lie in [0, 1/3]"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("dt must be positive and t_end non-negative"));
        }
        let ratio = self.dt_save / self.dt;
        let every = ratio.round();
        if !(every >= 1.0 && (ratio - every).abs() <= 1e-9 * ratio) {
            return Err(Error::invalid(
                "dt_save must be a positive integer multiple of dt",
            ));
        }
        let steps = (self.t_end / self.dt).round();
        if (self.t_end / self.dt - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::invalid("t_end must be an integer multiple of dt"));
        }
        if self.newton.max_iter == 0 || !(self.newton.rel_tol >= 0.0 && self.newton.abs_tol >= 0.0)
        {
            return Err(Error::invalid(
                "Newton options need max_iter >= 1 and non-negative tolerances",
            ));
        }
        if !(self.divergence_factor > 0.0) {
            return Err(Error::invalid("divergence factor must be positive"));
        }
        Ok((steps as usize, every as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    Diverged { time: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Save times, s.
    pub times: Vec<f64>,
    /// Generalized coordinates at the save times.
    pub states: Vec<Vector>,
    /// Full-space displacements at the save times, m.
    pub displacements: Vec<Vector>,
    /// Newton iterations of every step.
    pub iterations: Vec<usize>,
    pub status: Status,
    /// `(time, message)` pairs reported by the system.
    pub diagnostics: Vec<(f64, String)>,
}

impl Trajectory {
    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct HhtStep<'s, S: SecondOrderSystem + ?Sized> {
    system: &'s S,
    q: &'s Vector,
    qd: &'s Vector,
    qdd: &'s Vector,
    force_prev: &'s Vector,
    t: f64,
    dt: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    last_force: Option<Vector>,
}

impl<S: SecondOrderSystem + ?Sized> HhtStep<'_, S> {
    fn kinematics(&self, x: &Vector) -> (Vector, Vector) {
        let (dt, beta, gamma) = (self.dt, self.beta, self.gamma);
        let qdd =
            (x - self.q - self.qd * dt - self.qdd * (dt * dt * (0.5 - beta))) / (beta * dt * dt);
        let qd = self.qd + (self.qdd * (1.0 - gamma) + &qdd * gamma) * dt;
        (qd, qdd)
    }
}

impl<S: SecondOrderSystem + ?Sized> NewtonProblem for HhtStep<'_, S> {
    type Matrix = S::Matrix;

    fn evaluate(&mut self, x: &Vector) -> Result<NewtonEval<S::Matrix>> {
        let (qd, qdd) = self.kinematics(x);
        let weights = Weights {
            acceleration: 1.0 / (self.beta * self.dt * self.dt),
            velocity: self.gamma / (self.beta * self.dt),
            displacement: 1.0,
            force: 1.0 - self.alpha,
        };
        let e = self.system.evaluate(x, &qd, &qdd, self.t, Some(&weights))?;
        let residual = &e.inertia + &e.force * (1.0 - self.alpha) + self.force_prev * self.alpha;
        let matrix = e
            .matrix
            .ok_or_else(|| Error::invalid("system returned no iteration matrix"))?;
        self.last_force = Some(e.force);
        Ok(NewtonEval {
            residual,
            matrix,
            scale: e.magnitude,
        })
    }
}

/// Integrates from rest.
pub fn hht_run<S: SecondOrderSystem + ?Sized>(
    system: &S,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = system.size();
    hht_run_from(system, config, &Vector::zeros(n), &Vector::zeros(n))
}

/// Fixed-step HHT-α march with `β = (1+α)²/4` and `γ = ½+α`. Newton
/// failure or a displacement above the divergence ceiling ends the run with
/// [`Status::Diverged`]; only configuration problems are errors.
pub fn hht_run_from<S: SecondOrderSystem + ?Sized>(
    system: &S,
    config: &IntegratorConfig,
    q0: &Vector,
    qd0: &Vector,
) -> Result<Trajectory> {
    let (steps, every) = config.schedule()?;
    let n = system.size();
    if q0.len() != n || qd0.len() != n {
        return Err(Error::dims(
            "initial state length differs from the system size",
        ));
    }
    if q0.iter().chain(qd0.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite initial state"));
    }
    let alpha = config.alpha;
    let beta = 0.25 * (1.0 + alpha) * (1.0 + alpha);
    let gamma = 0.5 + alpha;
    let dt = config.dt;
    let ceiling = config.divergence_factor * system.characteristic_length();

    let initial_weights = Weights {
        acceleration: 1.0,
        velocity: 0.0,
        displacement: 0.0,
        force: 1.0,
    };
    let e = system.evaluate(q0, qd0, &Vector::zeros(n), 0.0, Some(&initial_weights))?;
    let matrix = e
        .matrix
        .ok_or_else(|| Error::invalid("system returned no iteration matrix"))?;
    let r0 = &e.inertia + &e.force;
    let mut qdd = -matrix.solve_system(&r0)?;
    let mut force = system.evaluate(q0, qd0, &qdd, 0.0, None)?.force;
    let (mut q, mut qd) = (q0.clone(), qd0.clone());

    let mut out = Trajectory {
        times: alloc::vec![0.0],
        states: alloc::vec![q.clone()],
        displacements: alloc::vec![system.lift(&q)],
        iterations: Vec::with_capacity(steps),
        status: Status::Completed,
        diagnostics: Vec::new(),
    };
    for k in 1..=steps {
        let t = k as f64 * dt;
        let mut step = HhtStep {
            system,
            q: &q,
            qd: &qd,
            qdd: &qdd,
            force_prev: &force,
            t,
            dt,
            alpha,
            beta,
            gamma,
            last_force: None,
        };
        let guess = &q + &qd * dt + &qdd * (0.5 * dt * dt);
        let report = newton_solve(&mut step, &guess, &config.newton);
        if let Some(reason) = report.failure {
            out.status = Status::Diverged { time: t, reason };
            return Ok(out);
        }
        let (qd_new, qdd_new) = step.kinematics(&report.x);
        let force_new = step
            .last_force
            .take()
            .expect("converged step has an evaluation");
        let u = system.lift(&report.x);
        let peak = u.amax();
        if !(peak <= ceiling) {
            out.status = Status::Diverged {
                time: t,
                reason: alloc::format!("displacement {peak:.3e} m exceeds {ceiling:.3e} m"),
            };
            return Ok(out);
        }
        if let Some(msg) = system.inspect(&report.x) {
            log::warn!("t = {t:.6}: {msg}");
            out.diagnostics.push((t, msg));
        }
        out.iterations.push(report.iterations);
        q = report.x;
        qd = qd_new;
        qdd = qdd_new;
        force = force_new;
        if k % every == 0 {
            out.times.push(t);
            out.states.push(q.clone());
            out.displacements.push(u);
        }
    }
    Ok(out)
}

/// Linear system `M q̈ + C q̇ + K q = F g(t)` with dense matrices.
#[derive(Debug, Clone)]
pub struct LinearSecondOrder {
    pub m: Matrix,
    pub c: Matrix,
    pub k: Matrix,
    pub load: Vector,
    pub forcing: Forcing,
}

impl LinearSecondOrder {
    /// Undamped unit-mass oscillator with circular frequency `omega`.
    pub fn oscillator(omega: f64) -> Self {
        Self {
            m: Matrix::identity(1, 1),
            c: Matrix::zeros(1, 1),
            k: Matrix::from_element(1, 1, omega * omega),
            load: Vector::zeros(1),
            forcing: Forcing::constant(),
        }
    }

    /// `½q̇ᵀMq̇ + ½qᵀKq`.
    pub fn energy(&self, q: &Vector, qd: &Vector) -> f64 {
        0.5 * (qd.dot(&(&self.m * qd)) + q.dot(&(&self.k * q)))
    }
}

impl SecondOrderSystem for LinearSecondOrder {
    type Matrix = Matrix;

    fn size(&self) -> usize {
        self.m.nrows()
    }

    fn evaluate(
        &self,
        q: &Vector,
        qd: &Vector,
        qdd: &Vector,
        t: f64,
        weights: Option<&Weights>,
    ) -> Result<Evaluation<Matrix>> {
        let inertia = &self.m * qdd;
        let (damp, elastic, ext) = (&self.c * qd, &self.k * q, &self.load * self.forcing.eval(t));
        let magnitude = inertia
            .norm()
            .max(damp.norm())
            .max(elastic.norm())
            .max(ext.norm());
        let force = damp + elastic - ext;
        let matrix = weights.map(|w| {
            &self.m * w.acceleration
                + &self.c * (w.velocity * w.force)
                + &self.k * (w.displacement * w.force)
        });
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
        1.0
    }
}
