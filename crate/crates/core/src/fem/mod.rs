//! Geometrically nonlinear structural models.
//!
//! Every model exposes the semi-discrete equation of motion
//! `M ü + C u̇ + f(u) = F g(t)` through [`StructuralModel`]. Mass, damping and
//! every tangent stiffness of one model share a single sparsity pattern.

mod model;
pub mod tri6;
mod vk_beam;

pub use model::FEModel;
pub use vk_beam::{VkBeamModel, VkSupport};

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::numerics::CsrMatrix;
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Pa.
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// kg/m³.
    pub density: f64,
    /// Out-of-plane thickness, m.
    pub thickness: f64,
}

impl Material {
    pub fn aluminium() -> Self {
        Self {
            youngs_modulus: 70e9,
            poisson_ratio: 0.3,
            density: 2700.0,
            thickness: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.youngs_modulus > 0.0
            && self.poisson_ratio > -1.0
            && self.poisson_ratio < 0.5
            && self.density > 0.0
            && self.thickness > 0.0
            && self.youngs_modulus.is_finite()
            && self.density.is_finite()
            && self.thickness.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "material requires E > 0, -1 < nu < 0.5, rho > 0, thickness > 0",
            ))
        }
    }
}

/// One term `amplitude · sin(2π · frequency · t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
}

/// Scalar time function `g(t)` as a sum of sinusoids; empty means `g ≡ 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub terms: Vec<Sinusoid>,
}

impl Forcing {
    pub fn constant() -> Self {
        Self::default()
    }

    pub fn sines(terms: &[(f64, f64)]) -> Self {
        Self {
            terms: terms
                .iter()
                .map(|&(amplitude, frequency)| Sinusoid {
                    amplitude,
                    frequency,
                })
                .collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.terms.is_empty() {
            return 1.0;
        }
        self.terms
            .iter()
            .map(|s| s.amplitude * (2.0 * PI * s.frequency * t).sin())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .terms
            .iter()
            .all(|s| s.frequency > 0.0 && s.frequency.is_finite() && s.amplitude.is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid(
                "forcing frequencies must be positive and amplitudes finite",
            ))
        }
    }
}

/// Constrained, discretized structure with `N` free dofs.
pub trait StructuralModel: Send + Sync {
    fn dofs(&self) -> usize;
    fn mass(&self) -> &CsrMatrix;
    /// `None` means `C = 0`.
    fn damping(&self) -> Option<&CsrMatrix>;
    /// Tangent stiffness at the reference configuration.
    fn linear_stiffness(&self) -> &CsrMatrix;
    fn internal_force(&self, u: &Vector) -> Result<Vector>;
    fn tangent_stiffness(&self, u: &Vector) -> Result<CsrMatrix>;
    fn force_and_stiffness(&self, u: &Vector) -> Result<(Vector, CsrMatrix)> {
        Ok((self.internal_force(u)?, self.tangent_stiffness(u)?))
    }
    /// Spatial load pattern `F`.
    fn load_pattern(&self) -> &Vector;
    fn forcing(&self) -> &Forcing;
    /// Bounding-box diagonal of the undeformed structure.
    fn characteristic_length(&self) -> f64;

    fn external_force(&self, t: f64) -> Vector {
        self.load_pattern() * self.forcing().eval(t)
    }
}

pub(crate) fn check_state(u: &Vector, n: usize) -> Result<()> {
    if u.len() != n {
        return Err(Error::dims(
            "displacement length differs from the dof count",
        ));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite displacement"));
    }
    Ok(())
}

pub(crate) fn rayleigh(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    a: f64,
    b: f64,
) -> Result<Option<CsrMatrix>> {
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("Rayleigh coefficients must be non-negative"));
    }
    if a == 0.0 && b == 0.0 {
        return Ok(None);
    }
    CsrMatrix::linear_combination(&[(a, mass), (b, stiffness)]).map(Some)
}
