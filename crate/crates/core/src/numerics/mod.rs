//! Linear-algebra services shared by the rest of the crate.

pub mod bordered;
pub mod eigen;
pub mod skyline;
pub mod sparse;
pub mod svd;

pub use bordered::{solve_bordered, BorderedSolution, BorderedSolver};
pub use eigen::{eig_gsym, EigenPairs};
pub use skyline::{factor_spd, factor_symmetric, SpdFactor};
pub use sparse::CsrMatrix;
pub use svd::{svd_thin, ThinSvd};

use crate::{Error, Matrix, Result, Vector};

/// Square system matrices that can be solved for one right-hand side.
pub trait LinearSolve {
    fn solve_system(&self, rhs: &Vector) -> Result<Vector>;
}

impl LinearSolve for CsrMatrix {
    fn solve_system(&self, rhs: &Vector) -> Result<Vector> {
        let factor = factor_symmetric(self).map_err(|_| Error::Singular)?;
        Ok(factor.solve(rhs))
    }
}

impl LinearSolve for Matrix {
    fn solve_system(&self, rhs: &Vector) -> Result<Vector> {
        if !self.is_square() || self.nrows() != rhs.len() {
            return Err(Error::dims("dense system size"));
        }
        let lu = self.clone().lu();
        let x = lu.solve(rhs).ok_or(Error::Singular)?;
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular)
        }
    }
}

/// Euclidean-orthonormal basis of the column span of `a` (Householder QR).
pub fn orthonormal_columns(a: &Matrix) -> Matrix {
    a.clone().qr().q()
}
