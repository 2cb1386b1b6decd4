use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{check_state, rayleigh, Forcing, Material, StructuralModel};
use crate::numerics::CsrMatrix;
use crate::{Error, Result, Vector};

/// Four-point Gauss–Legendre rule on `[0, 1]`.
const GAUSS: [(f64, f64); 4] = {
    const A: f64 = 0.339_981_043_584_856_264_8;
    const B: f64 = 0.861_136_311_594_052_575_2;
    const WA: f64 = 0.652_145_154_862_546_142_6;
    const WB: f64 = 0.347_854_845_137_453_857_4;
    [
        (0.5 * (1.0 - B), 0.5 * WB),
        (0.5 * (1.0 - A), 0.5 * WA),
        (0.5 * (1.0 + A), 0.5 * WA),
        (0.5 * (1.0 + B), 0.5 * WB),
    ]
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VkSupport {
    ClampedClamped,
    Cantilever,
}

/// Straight von Kármán beam of 2-node elements with nodal dofs `(u, w, w′)`:
/// linear axial and Hermite-cubic transverse interpolation. The axial strain
/// is `u′ + ½w′²` and the curvature `w″`.
#[derive(Debug, Clone)]
pub struct VkBeamModel {
    length: f64,
    height: f64,
    elements: usize,
    ea: f64,
    ei: f64,
    rho_a: f64,
    dof_map: Vec<[Option<usize>; 3]>,
    ndofs: usize,
    pattern: CsrMatrix,
    mass: CsrMatrix,
    k0: CsrMatrix,
    damping: Option<CsrMatrix>,
    load: Vector,
    forcing: Forcing,
}

struct Shapes {
    /// d/dx of the two axial shape functions.
    du: [f64; 2],
    /// Hermite functions and their first and second x-derivatives.
    h: [f64; 4],
    dh: [f64; 4],
    ddh: [f64; 4],
}

fn hermite(s: f64, le: f64) -> Shapes {
    let (s2, s3) = (s * s, s * s * s);
    Shapes {
        du: [-1.0 / le, 1.0 / le],
        h: [
            1.0 - 3.0 * s2 + 2.0 * s3,
            le * (s - 2.0 * s2 + s3),
            3.0 * s2 - 2.0 * s3,
            le * (s3 - s2),
        ],
        dh: [
            (-6.0 * s + 6.0 * s2) / le,
            1.0 - 4.0 * s + 3.0 * s2,
            (6.0 * s - 6.0 * s2) / le,
            3.0 * s2 - 2.0 * s,
        ],
        ddh: [
            (-6.0 + 12.0 * s) / (le * le),
            (-4.0 + 6.0 * s) / le,
            (6.0 - 12.0 * s) / (le * le),
            (6.0 * s - 2.0) / le,
        ],
    }
}

/// Local layout `[u1, w1, θ1, u2, w2, θ2]`.
const U_IDX: [usize; 2] = [0, 3];
const W_IDX: [usize; 4] = [1, 2, 4, 5];

impl VkBeamModel {
    /// Beam `[0, length]` of cross-section `height × material.thickness`.
    pub fn new(
        length: f64,
        height: f64,
        elements: usize,
        material: &Material,
        support: VkSupport,
    ) -> Result<Self> {
        material.validate()?;
        if !(length > 0.0 && height > 0.0) || elements == 0 {
            return Err(Error::invalid(
                "beam needs positive dimensions and at least one element",
            ));
        }
        let area = height * material.thickness;
        let mut dof_map = Vec::with_capacity(elements + 1);
        let mut ndofs = 0;
        for node in 0..=elements {
            let fixed = node == 0 || (node == elements && support == VkSupport::ClampedClamped);
            if fixed {
                dof_map.push([None; 3]);
            } else {
                dof_map.push([Some(ndofs), Some(ndofs + 1), Some(ndofs + 2)]);
                ndofs += 3;
            }
        }
        let mut rows = vec![Vec::new(); ndofs];
        for e in 0..elements {
            let dofs: Vec<usize> = dof_map[e]
                .iter()
                .chain(&dof_map[e + 1])
                .flatten()
                .copied()
                .collect();
            for &r in &dofs {
                rows[r].extend_from_slice(&dofs);
            }
        }
        let pattern = CsrMatrix::from_pattern(ndofs, ndofs, rows);
        let mut model = Self {
            length,
            height,
            elements,
            ea: material.youngs_modulus * area,
            ei: material.youngs_modulus * material.thickness * height.powi(3) / 12.0,
            rho_a: material.density * area,
            dof_map,
            ndofs,
            mass: pattern.clone(),
            k0: pattern.clone(),
            pattern,
            damping: None,
            load: Vector::zeros(ndofs),
            forcing: Forcing::constant(),
        };
        model.mass = model.assemble_mass();
        model.k0 = model.tangent_stiffness(&Vector::zeros(ndofs))?;
        Ok(model)
    }

    pub fn with_load(mut self, pattern: Vector, forcing: Forcing) -> Result<Self> {
        if pattern.len() != self.ndofs {
            return Err(Error::dims(
                "load pattern length differs from the dof count",
            ));
        }
        forcing.validate()?;
        self.load = pattern;
        self.forcing = forcing;
        Ok(self)
    }

    pub fn with_rayleigh(mut self, a: f64, b: f64) -> Result<Self> {
        self.damping = rayleigh(&self.mass, &self.k0, a, b)?;
        Ok(self)
    }

    pub fn element_count(&self) -> usize {
        self.elements
    }

    /// Global index of component `comp` (0 = u, 1 = w, 2 = w′) of `node`.
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.dof_map.get(node).and_then(|d| d[comp])
    }

    pub fn node_x(&self, node: usize) -> f64 {
        self.length * node as f64 / self.elements as f64
    }

    /// Free axial dofs, ascending.
    pub fn axial_dofs(&self) -> Vec<usize> {
        self.dof_map.iter().filter_map(|d| d[0]).collect()
    }

    /// Free transverse dofs (`w` and `w′`), ascending.
    pub fn transverse_dofs(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .dof_map
            .iter()
            .flat_map(|d| [d[1], d[2]])
            .flatten()
            .collect();
        out.sort_unstable();
        out
    }

    /// Consistent nodal loads of a uniform transverse line load `q` (N/m).
    pub fn uniform_load(&self, q: f64) -> Vector {
        let le = self.element_length();
        let local = [
            0.5 * q * le,
            q * le * le / 12.0,
            0.5 * q * le,
            -q * le * le / 12.0,
        ];
        let mut f = Vector::zeros(self.ndofs);
        for e in 0..self.elements {
            let dofs = self.element_dofs(e);
            for (k, &li) in W_IDX.iter().enumerate() {
                if let Some(d) = dofs[li] {
                    f[d] += local[k];
                }
            }
        }
        f
    }

    fn element_length(&self) -> f64 {
        self.length / self.elements as f64
    }

    fn element_dofs(&self, e: usize) -> [Option<usize>; 6] {
        let (a, b) = (self.dof_map[e], self.dof_map[e + 1]);
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    fn scatter_matrix(&self, dofs: &[Option<usize>; 6], ke: &[[f64; 6]; 6], k: &mut CsrMatrix) {
        for (r, dr) in dofs.iter().enumerate() {
            let Some(i) = dr else { continue };
            for (c, dc) in dofs.iter().enumerate() {
                if let Some(j) = dc {
                    k.add_at(*i, *j, ke[r][c]);
                }
            }
        }
    }

    fn assemble_mass(&self) -> CsrMatrix {
        let le = self.element_length();
        let mut me = [[0.0; 6]; 6];
        for &(s, w) in &GAUSS {
            let sh = hermite(s, le);
            let nu = [1.0 - s, s];
            let dv = w * le * self.rho_a;
            for a in 0..2 {
                for b in 0..2 {
                    me[U_IDX[a]][U_IDX[b]] += dv * nu[a] * nu[b];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    me[W_IDX[a]][W_IDX[b]] += dv * sh.h[a] * sh.h[b];
                }
            }
        }
        let mut m = self.pattern.zeros_like();
        for e in 0..self.elements {
            self.scatter_matrix(&self.element_dofs(e), &me, &mut m);
        }
        m
    }

    fn element_response(&self, ue: &[f64; 6], tangent: bool) -> ([f64; 6], [[f64; 6]; 6]) {
        let le = self.element_length();
        let mut fe = [0.0; 6];
        let mut ke = [[0.0; 6]; 6];
        for &(s, w) in &GAUSS {
            let sh = hermite(s, le);
            let dv = w * le;
            let du: f64 = (0..2).map(|a| sh.du[a] * ue[U_IDX[a]]).sum();
            let dw: f64 = (0..4).map(|a| sh.dh[a] * ue[W_IDX[a]]).sum();
            let ddw: f64 = (0..4).map(|a| sh.ddh[a] * ue[W_IDX[a]]).sum();
            let n = self.ea * (du + 0.5 * dw * dw);
            let m = self.ei * ddw;
            for a in 0..2 {
                fe[U_IDX[a]] += dv * n * sh.du[a];
            }
            for a in 0..4 {
                fe[W_IDX[a]] += dv * (n * dw * sh.dh[a] + m * sh.ddh[a]);
            }
            if !tangent {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    ke[U_IDX[a]][U_IDX[b]] += dv * self.ea * sh.du[a] * sh.du[b];
                }
                for b in 0..4 {
                    let v = dv * self.ea * sh.du[a] * dw * sh.dh[b];
                    ke[U_IDX[a]][W_IDX[b]] += v;
                    ke[W_IDX[b]][U_IDX[a]] += v;
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    ke[W_IDX[a]][W_IDX[b]] += dv
                        * (self.ei * sh.ddh[a] * sh.ddh[b]
                            + (self.ea * dw * dw + n) * sh.dh[a] * sh.dh[b]);
                }
            }
        }
        (fe, ke)
    }

    fn assemble(&self, u: &Vector, tangent: bool) -> Result<(Vector, Option<CsrMatrix>)> {
        check_state(u, self.ndofs)?;
        let mut f = Vector::zeros(self.ndofs);
        let mut k = tangent.then(|| self.pattern.zeros_like());
        for e in 0..self.elements {
            let dofs = self.element_dofs(e);
            let ue = dofs.map(|d| d.map_or(0.0, |i| u[i]));
            let (fe, ke) = self.element_response(&ue, tangent);
            for (r, d) in dofs.iter().enumerate() {
                if let Some(i) = d {
                    f[*i] += fe[r];
                }
            }
            if let Some(k) = k.as_mut() {
                self.scatter_matrix(&dofs, &ke, k);
            }
        }
        Ok((f, k))
    }
}

impl StructuralModel for VkBeamModel {
    fn dofs(&self) -> usize {
        self.ndofs
    }

    fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    fn damping(&self) -> Option<&CsrMatrix> {
        self.damping.as_ref()
    }

    fn linear_stiffness(&self) -> &CsrMatrix {
        &self.k0
    }

    fn internal_force(&self, u: &Vector) -> Result<Vector> {
        Ok(self.assemble(u, false)?.0)
    }

    fn tangent_stiffness(&self, u: &Vector) -> Result<CsrMatrix> {
        Ok(self.force_and_stiffness(u)?.1)
    }

    fn force_and_stiffness(&self, u: &Vector) -> Result<(Vector, CsrMatrix)> {
        let (f, k) = self.assemble(u, true)?;
        Ok((f, k.expect("tangent requested")))
    }

    fn load_pattern(&self) -> &Vector {
        &self.load
    }

    fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    fn characteristic_length(&self) -> f64 {
        self.length.hypot(self.height)
    }
}
