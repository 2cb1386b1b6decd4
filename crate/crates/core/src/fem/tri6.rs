//! 6-node triangle in total-Lagrangian plane stress.
//!
//! Element vectors interleave components: entry `2a + i` is component `i` of
//! local node `a`.

use super::Material;

/// Six-point rule exact for degree 4 on the reference triangle, as
/// `(ξ, η, weight)` with weights summing to ½.
pub const QUADRATURE: [(f64, f64, f64); 6] = {
    const A: f64 = 0.445_948_490_915_964_886_32;
    const WA: f64 = 0.5 * 0.223_381_589_678_011_465_70;
    const B: f64 = 0.091_576_213_509_770_743_46;
    const WB: f64 = 0.5 * 0.109_951_743_655_321_867_64;
    [
        (A, A, WA),
        (1.0 - 2.0 * A, A, WA),
        (A, 1.0 - 2.0 * A, WA),
        (B, B, WB),
        (1.0 - 2.0 * B, B, WB),
        (B, 1.0 - 2.0 * B, WB),
    ]
};

pub type ElementVector = [f64; 12];
pub type ElementMatrix = [[f64; 12]; 12];

/// Shape functions at `(ξ, η)`.
pub fn shape(xi: f64, eta: f64) -> [f64; 6] {
    let l1 = 1.0 - xi - eta;
    let (l2, l3) = (xi, eta);
    [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ]
}

/// Shape-function gradients `[∂N/∂ξ, ∂N/∂η]` at `(ξ, η)`.
pub fn shape_gradients(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l1 = 1.0 - xi - eta;
    [
        [1.0 - 4.0 * l1, 1.0 - 4.0 * l1],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l1 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l1 - eta)],
    ]
}

/// Quadrature point data in reference (undeformed) coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PointData {
    /// `∂N_a/∂X_k`.
    pub grad: [[f64; 2]; 6],
    pub shape: [f64; 6],
    /// Quadrature weight × det J × thickness.
    pub dvol: f64,
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub points: [PointData; 6],
}

impl ElementGeometry {
    /// Precomputes gradients; returns the smallest Jacobian determinant on
    /// failure (non-positive).
    pub fn new(x: &[[f64; 2]; 6], thickness: f64) -> Result<Self, f64> {
        let mut points = [PointData {
            grad: [[0.0; 2]; 6],
            shape: [0.0; 6],
            dvol: 0.0,
        }; 6];
        for (p, &(xi, eta, w)) in points.iter_mut().zip(QUADRATURE.iter()) {
            let dn = shape_gradients(xi, eta);
            let mut j = [[0.0; 2]; 2];
            for a in 0..6 {
                for r in 0..2 {
                    for c in 0..2 {
                        j[r][c] += x[a][r] * dn[a][c];
                    }
                }
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(det);
            }
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            for a in 0..6 {
                // ∂N/∂X = J⁻ᵀ ∂N/∂ξ
                p.grad[a] = [
                    dn[a][0] * inv[0][0] + dn[a][1] * inv[1][0],
                    dn[a][0] * inv[0][1] + dn[a][1] * inv[1][1],
                ];
            }
            p.shape = shape(xi, eta);
            p.dvol = w * det * thickness;
        }
        Ok(Self { points })
    }

    pub fn volume(&self) -> f64 {
        self.points.iter().map(|p| p.dvol).sum()
    }
}

/// Plane-stress elasticity matrix in Voigt order `(11, 22, 12)` with
/// engineering shear strain.
pub fn plane_stress(material: &Material) -> [[f64; 3]; 3] {
    let (e, nu) = (material.youngs_modulus, material.poisson_ratio);
    let c = e / (1.0 - nu * nu);
    [
        [c, c * nu, 0.0],
        [c * nu, c, 0.0],
        [0.0, 0.0, c * 0.5 * (1.0 - nu)],
    ]
}

struct Kinematics {
    /// Deformation gradient `F = I + ∂u/∂X`.
    f: [[f64; 2]; 2],
    /// Second Piola–Kirchhoff stress `(S11, S22, S12)`.
    s: [f64; 3],
}

fn kinematics(p: &PointData, ue: &ElementVector, d: &[[f64; 3]; 3]) -> Kinematics {
    let mut h = [[0.0; 2]; 2];
    for a in 0..6 {
        for i in 0..2 {
            for k in 0..2 {
                h[i][k] += ue[2 * a + i] * p.grad[a][k];
            }
        }
    }
    let e11 = h[0][0] + 0.5 * (h[0][0] * h[0][0] + h[1][0] * h[1][0]);
    let e22 = h[1][1] + 0.5 * (h[0][1] * h[0][1] + h[1][1] * h[1][1]);
    let g12 = h[0][1] + h[1][0] + h[0][0] * h[0][1] + h[1][0] * h[1][1];
    let eps = [e11, e22, g12];
    let mut s = [0.0; 3];
    for r in 0..3 {
        for c in 0..3 {
            s[r] += d[r][c] * eps[c];
        }
    }
    Kinematics {
        f: [[1.0 + h[0][0], h[0][1]], [h[1][0], 1.0 + h[1][1]]],
        s,
    }
}

/// Strain–displacement row of local dof `2a + i`.
fn b_row(kin: &Kinematics, g: &[f64; 2], i: usize) -> [f64; 3] {
    let f = &kin.f;
    [
        f[i][0] * g[0],
        f[i][1] * g[1],
        f[i][0] * g[1] + f[i][1] * g[0],
    ]
}

pub fn internal_force(
    geom: &ElementGeometry,
    ue: &ElementVector,
    d: &[[f64; 3]; 3],
) -> ElementVector {
    let mut fe = [0.0; 12];
    for p in &geom.points {
        let kin = kinematics(p, ue, d);
        for a in 0..6 {
            for i in 0..2 {
                let b = b_row(&kin, &p.grad[a], i);
                fe[2 * a + i] += p.dvol * (b[0] * kin.s[0] + b[1] * kin.s[1] + b[2] * kin.s[2]);
            }
        }
    }
    fe
}

/// Internal force and its exact tangent (material plus geometric part).
pub fn force_and_tangent(
    geom: &ElementGeometry,
    ue: &ElementVector,
    d: &[[f64; 3]; 3],
) -> (ElementVector, ElementMatrix) {
    let mut fe = [0.0; 12];
    let mut ke = [[0.0; 12]; 12];
    for p in &geom.points {
        let kin = kinematics(p, ue, d);
        let s = kin.s;
        let mut b = [[0.0; 3]; 12];
        let mut db = [[0.0; 3]; 12];
        for a in 0..6 {
            for i in 0..2 {
                let r = 2 * a + i;
                b[r] = b_row(&kin, &p.grad[a], i);
                for m in 0..3 {
                    db[r][m] = d[m][0] * b[r][0] + d[m][1] * b[r][1] + d[m][2] * b[r][2];
                }
                fe[r] += p.dvol * (b[r][0] * s[0] + b[r][1] * s[1] + b[r][2] * s[2]);
            }
        }
        for r in 0..12 {
            for c in r..12 {
                let v = b[r][0] * db[c][0] + b[r][1] * db[c][1] + b[r][2] * db[c][2];
                ke[r][c] += p.dvol * v;
            }
        }
        for a in 0..6 {
            let ga = p.grad[a];
            for bn in a..6 {
                let gb = p.grad[bn];
                let g =
                    ga[0] * (s[0] * gb[0] + s[2] * gb[1]) + ga[1] * (s[2] * gb[0] + s[1] * gb[1]);
                for i in 0..2 {
                    ke[2 * a + i][2 * bn + i] += p.dvol * g;
                }
            }
        }
    }
    for r in 0..12 {
        for c in 0..r {
            ke[r][c] = ke[c][r];
        }
    }
    (fe, ke)
}

/// Consistent mass for unit density (scale by ρ afterwards).
pub fn mass(geom: &ElementGeometry) -> ElementMatrix {
    let mut me = [[0.0; 12]; 12];
    for p in &geom.points {
        for a in 0..6 {
            for b in 0..6 {
                let v = p.dvol * p.shape[a] * p.shape[b];
                me[2 * a][2 * b] += v;
                me[2 * a + 1][2 * b + 1] += v;
            }
        }
    }
    me
}
