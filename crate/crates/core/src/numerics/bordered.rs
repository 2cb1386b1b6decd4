//! Solutions of singular symmetric systems with a one-dimensional nullspace.
//!
//! The problem is the bordered system
//!
//! ```text
//! [ A   c ] [x]   [rhs]
//! [ cᵀ  0 ] [λ] = [ 0 ]
//! ```
//!
//! where `A·φ = 0` and `cᵀφ ≠ 0`. It is solved without forming the border:
//! the row and column of the largest `|φ_p|` are dropped (which makes the
//! remainder nonsingular), the reduced system is factored by LDLᵀ, and the
//! particular solution is shifted along `φ` to meet `cᵀx = 0`.

use super::skyline::{factor_symmetric, SpdFactor};
use super::sparse::CsrMatrix;
use crate::{Error, Result, Vector};

/// Relative tolerance on `|φᵀ·rhs|` for the system to count as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BorderedSolution {
    pub x: Vector,
    /// Border multiplier; zero for consistent right-hand sides.
    pub lambda: f64,
}

/// Factored bordered operator, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    a: CsrMatrix,
    null: Vector,
    constraint: Vector,
    dropped: usize,
    factor: SpdFactor,
}

impl BorderedSolver {
    pub fn new(a: &CsrMatrix, null: &Vector, constraint: &Vector) -> Result<Self> {
        let n = a.nrows();
        if null.len() != n || constraint.len() != n || a.ncols() != n {
            return Err(Error::dims(
                "bordered operator, nullspace and constraint sizes differ",
            ));
        }
        if null.dot(constraint).abs() <= 1e-14 * null.norm() * constraint.norm() {
            return Err(Error::invalid(
                "constraint is orthogonal to the nullspace direction",
            ));
        }
        let dropped = null.iamax();
        let factor = factor_symmetric(&a.without_index(dropped))?;
        Ok(Self {
            a: a.clone(),
            null: null.clone(),
            constraint: constraint.clone(),
            dropped,
            factor,
        })
    }

    pub fn solve(&self, rhs: &Vector) -> Result<BorderedSolution> {
        let n = self.a.nrows();
        if rhs.len() != n {
            return Err(Error::dims("right-hand side length"));
        }
        let rhs_norm = rhs.norm();
        let projection = self.null.dot(rhs) / self.null.norm();
        if projection.abs() > CONSISTENCY_TOL * rhs_norm {
            return Err(Error::Inconsistent {
                magnitude: projection.abs(),
            });
        }
        let p = self.dropped;
        let reduce =
            |v: &Vector| Vector::from_iterator(n - 1, (0..n).filter(|&i| i != p).map(|i| v[i]));
        let expand = |v: &Vector| {
            let mut out = Vector::zeros(n);
            for (k, i) in (0..n).filter(|&i| i != p).enumerate() {
                out[i] = v[k];
            }
            out
        };
        let mut x = expand(&self.factor.solve(&reduce(rhs)));
        // one sweep of iterative refinement against the full operator
        let r = rhs - self.a.mul_vec(&x);
        x += expand(&self.factor.solve(&reduce(&r)));
        let shift = self.constraint.dot(&x) / self.constraint.dot(&self.null);
        x.axpy(-shift, &self.null, 1.0);
        let lambda = self.null.dot(rhs) / self.null.dot(&self.constraint);
        Ok(BorderedSolution { x, lambda })
    }
}

/// One-shot bordered solve. `null` spans the nullspace of `a`; the solution
/// satisfies `constraintᵀ·x = 0`. Pass `constraint = null` for the plain
/// orthogonality border.
pub fn solve_bordered(
    a: &CsrMatrix,
    null: &Vector,
    constraint: &Vector,
    rhs: &Vector,
) -> Result<BorderedSolution> {
    BorderedSolver::new(a, null, constraint)?.solve(rhs)
}
