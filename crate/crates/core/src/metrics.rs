//! Trajectory error and the modal-amplitude coupling diagnostic.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::basis::{pairs, QuadTensor};
use crate::integrate::{Status, Trajectory};
use crate::methods::Method;
use crate::numerics::{factor_spd, CsrMatrix};
use crate::{Error, Matrix, Result, Vector};

/// Relative residual below which a stacked column counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// `sqrt(Σ_t Δuᵀ M Δu) / sqrt(Σ_t u_refᵀ M u_ref)` over paired snapshots.
pub fn gre_m_series(test: &[Vector], reference: &[Vector], m: &CsrMatrix) -> Result<f64> {
    if test.len() != reference.len() || test.is_empty() {
        return Err(Error::invalid(
            "test and reference need the same non-empty set of save times",
        ));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (u, r) in test.iter().zip(reference) {
        if u.len() != m.nrows() || r.len() != m.nrows() {
            return Err(Error::dims("snapshot length differs from the mass matrix"));
        }
        let d = u - r;
        num += m.bilinear(&d, &d);
        den += m.bilinear(r, r);
    }
    if !(den > 0.0) {
        return Err(Error::UndefinedMetric(
            "reference trajectory has zero energy".into(),
        ));
    }
    Ok((num.max(0.0) / den).sqrt())
}

/// GRE_M between two trajectories saved on the same time grid.
pub fn gre_m(test: &Trajectory, reference: &Trajectory, m: &CsrMatrix) -> Result<f64> {
    let same_grid = test.times.len() == reference.times.len()
        && test
            .times
            .iter()
            .zip(&reference.times)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1e-9));
    if !same_grid {
        return Err(Error::invalid(
            "trajectories are saved on different time grids",
        ));
    }
    gre_m_series(&test.displacements, &reference.displacements, m)
}

/// Least-squares coefficients of snapshots on `[v₁ … v_n, θ_ij (i ≤ j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes {
    pub n: usize,
    /// `q_i(t)`, one vector per save time.
    pub linear: Vec<Vector>,
    /// `q_ij(t)` in packed pair order, one vector per save time.
    pub quadratic: Vec<Vector>,
}

/// `M`-weighted least-squares amplitudes of every snapshot.
pub fn reconstruct_amplitudes(
    snapshots: &[Vector],
    v: &Matrix,
    theta: &QuadTensor,
    m: &CsrMatrix,
) -> Result<Amplitudes> {
    let n = v.ncols();
    if theta.n() != n || theta.dofs() != v.nrows() || m.nrows() != v.nrows() {
        return Err(Error::dims("basis, tensor and mass sizes disagree"));
    }
    let factor = factor_spd(m)?;
    let cols: Vec<Vector> = v
        .column_iter()
        .map(|c| c.clone_owned())
        .chain(pairs(n).map(|(i, j)| theta.column(i, j)))
        .collect();
    let weighted: Vec<Vector> = cols
        .iter()
        .map(|c| factor.half_transform(c))
        .collect::<Result<_>>()?;

    // modified Gram-Schmidt with one reorthogonalization pass
    let k = weighted.len();
    let mut q: Vec<Vector> = Vec::with_capacity(k);
    let mut r = Matrix::zeros(k, k);
    let mut dependent = Vec::new();
    for (c, col) in weighted.iter().enumerate() {
        let mut w = col.clone();
        for _ in 0..2 {
            for (p, qp) in q.iter().enumerate() {
                let h = qp.dot(&w);
                r[(p, c)] += h;
                w.axpy(-h, qp, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= DEPENDENCE_TOL * col.norm() || norm == 0.0 {
            dependent.push(c);
            q.push(Vector::zeros(col.len()));
            continue;
        }
        r[(c, c)] = norm;
        q.push(w / norm);
    }
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }
    let r = r.upper_triangle();
    let qm = Matrix::from_columns(&q);
    let mut linear = Vec::with_capacity(snapshots.len());
    let mut quadratic = Vec::with_capacity(snapshots.len());
    for u in snapshots {
        if u.len() != v.nrows() {
            return Err(Error::dims("snapshot length differs from the basis rows"));
        }
        let rhs = qm.tr_mul(&factor.half_transform(u)?);
        let c = r.solve_upper_triangular(&rhs).ok_or(Error::Singular)?;
        linear.push(c.rows(0, n).clone_owned());
        quadratic.push(c.rows(n, k - n).clone_owned());
    }
    Ok(Amplitudes {
        n,
        linear,
        quadratic,
    })
}

/// Discrepancy between `q_ij(t)` and the products of linear amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// `(i, j)` in packed order.
    pub pairs: Vec<(usize, usize)>,
    /// `‖q_ij − ĉ_ij‖ / (‖q_ij‖ + ‖ĉ_ij‖ + floor)` per pair.
    pub ratios: Vec<f64>,
    /// Per pair and save time, `q_ij(t) − ĉ_ij(t)`.
    pub discrepancy: Vec<Vec<f64>>,
    /// Mean of the ratios weighted by `‖q_ij‖² + ‖ĉ_ij‖²`.
    pub score: f64,
}

/// `ĉ_ij = z_i z_j` for `i < j` and `½z_i²` on the diagonal.
pub fn coupling_report(amplitudes: &Amplitudes) -> CouplingReport {
    let n = amplitudes.n;
    let prs: Vec<(usize, usize)> = pairs(n).collect();
    let expected = |z: &Vector, (i, j): (usize, usize)| {
        if i == j {
            0.5 * z[i] * z[i]
        } else {
            z[i] * z[j]
        }
    };
    let mut sq = 0.0;
    let mut count = 0usize;
    for (z, qq) in amplitudes.linear.iter().zip(&amplitudes.quadratic) {
        for (p, &pair) in prs.iter().enumerate() {
            sq += qq[p] * qq[p] + expected(z, pair).powi(2);
            count += 2;
        }
    }
    let floor = 1e-12 * (sq / count.max(1) as f64).sqrt();
    let mut ratios = Vec::with_capacity(prs.len());
    let mut discrepancy = Vec::with_capacity(prs.len());
    let (mut weighted, mut total) = (0.0, 0.0);
    for (p, &pair) in prs.iter().enumerate() {
        let (mut d2, mut q2, mut c2) = (0.0, 0.0, 0.0);
        let mut series = Vec::with_capacity(amplitudes.linear.len());
        for (z, qq) in amplitudes.linear.iter().zip(&amplitudes.quadratic) {
            let c = expected(z, pair);
            d2 += (qq[p] - c).powi(2);
            q2 += qq[p] * qq[p];
            c2 += c * c;
            series.push(qq[p] - c);
        }
        let ratio = d2.sqrt() / (q2.sqrt() + c2.sqrt() + floor);
        weighted += ratio * (q2 + c2);
        total += q2 + c2;
        ratios.push(ratio);
        discrepancy.push(series);
    }
    let score = if total > 0.0 { weighted / total } else { 0.0 };
    CouplingReport {
        pairs: prs,
        ratios,
        discrepancy,
        score,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Error { gre_m: f64 },
    Diverged { time: f64 },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub method: Method,
    /// Number of modes or Krylov vectors requested.
    pub modes: usize,
    /// Size of the reduced system.
    pub reduced_dofs: usize,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub scenario: String,
    pub dt: f64,
    pub t_end: f64,
    pub entries: Vec<ErrorEntry>,
}

impl ErrorEntry {
    /// Compares a reduced run with the reference; diverged runs carry no number.
    pub fn evaluate(
        method: Method,
        modes: usize,
        reduced_dofs: usize,
        test: &Trajectory,
        reference: &Trajectory,
        m: &CsrMatrix,
    ) -> Self {
        let outcome = match &test.status {
            Status::Diverged { time, .. } => Outcome::Diverged { time: *time },
            Status::Completed => match gre_m(test, reference, m) {
                Ok(gre_m) => Outcome::Error { gre_m },
                Err(e) => Outcome::Failed {
                    message: alloc::format!("{e}"),
                },
            },
        };
        Self {
            method,
            modes,
            reduced_dofs,
            outcome,
        }
    }

    pub fn gre_m(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Error { gre_m } => Some(gre_m),
            _ => None,
        }
    }
}
