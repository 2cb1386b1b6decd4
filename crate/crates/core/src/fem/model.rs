use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::tri6::{self, ElementGeometry, ElementMatrix, ElementVector};
use super::{check_state, rayleigh, Forcing, Material, StructuralModel};
use crate::mesh::Mesh;
use crate::numerics::CsrMatrix;
use crate::{Error, Result, Vector};

/// Plane-stress continuum of 6-node triangles with clamped edge sets removed
/// from the unknowns. Free dofs are numbered node by node, `x` before `y`.
#[derive(Debug, Clone)]
pub struct FEModel {
    mesh: Mesh,
    material: Material,
    elasticity: [[f64; 3]; 3],
    constrained_sets: Vec<String>,
    dof_map: Vec<[Option<usize>; 2]>,
    ndofs: usize,
    geometry: Vec<ElementGeometry>,
    element_dofs: Vec<[Option<usize>; 12]>,
    pattern: CsrMatrix,
    mass: CsrMatrix,
    k0: CsrMatrix,
    damping: Option<CsrMatrix>,
    load: Vector,
    forcing: Forcing,
    char_len: f64,
}

impl FEModel {
    /// Builds the model with every node of the named sets fixed in both
    /// directions. The load pattern starts at zero with constant forcing.
    pub fn new(mesh: Mesh, material: Material, clamped: &[&str]) -> Result<Self> {
        material.validate()?;
        let mut fixed = vec![false; mesh.nodes.len()];
        for name in clamped {
            let nodes = mesh
                .node_sets
                .get(*name)
                .ok_or_else(|| Error::NotFound(alloc::format!("node set '{name}'")))?;
            for &i in nodes {
                fixed[i] = true;
            }
        }
        let mut dof_map = Vec::with_capacity(mesh.nodes.len());
        let mut ndofs = 0;
        for &f in &fixed {
            if f {
                dof_map.push([None, None]);
            } else {
                dof_map.push([Some(ndofs), Some(ndofs + 1)]);
                ndofs += 2;
            }
        }
        if ndofs == 0 {
            return Err(Error::invalid("every node is constrained"));
        }

        let mut geometry = Vec::with_capacity(mesh.elements.len());
        let mut element_dofs = Vec::with_capacity(mesh.elements.len());
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); ndofs];
        for (e, el) in mesh.elements.iter().enumerate() {
            let x = el.map(|i| mesh.nodes[i]);
            let geom = ElementGeometry::new(&x, material.thickness)
                .map_err(|det| Error::DegenerateElement { element: e, det })?;
            geometry.push(geom);
            let mut dofs = [None; 12];
            for (a, &node) in el.iter().enumerate() {
                dofs[2 * a] = dof_map[node][0];
                dofs[2 * a + 1] = dof_map[node][1];
            }
            for r in dofs.iter().flatten() {
                rows[*r].extend(dofs.iter().flatten());
            }
            element_dofs.push(dofs);
        }
        let pattern = CsrMatrix::from_pattern(ndofs, ndofs, rows);
        let char_len = mesh.bounding_diagonal();
        let mut model = Self {
            elasticity: tri6::plane_stress(&material),
            mesh,
            material,
            constrained_sets: clamped.iter().map(|s| s.to_string()).collect(),
            dof_map,
            ndofs,
            geometry,
            element_dofs,
            mass: pattern.clone(),
            k0: pattern.clone(),
            pattern,
            damping: None,
            load: Vector::zeros(ndofs),
            forcing: Forcing::constant(),
            char_len,
        };
        model.mass = model.assemble_mass();
        model.k0 = model.tangent_stiffness(&Vector::zeros(ndofs))?;
        Ok(model)
    }

    /// Replaces the load pattern and its time function.
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

    /// Sets `C = a·M + b·K(0)`.
    pub fn with_rayleigh(mut self, a: f64, b: f64) -> Result<Self> {
        self.damping = rayleigh(&self.mass, &self.k0, a, b)?;
        Ok(self)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn constrained_sets(&self) -> &[String] {
        &self.constrained_sets
    }

    /// Global index of component `comp` of `node`, `None` when constrained.
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.dof_map.get(node).and_then(|d| d[comp])
    }

    /// Reference area from the element quadrature.
    pub fn area(&self) -> f64 {
        self.geometry
            .iter()
            .map(ElementGeometry::volume)
            .sum::<f64>()
            / self.material.thickness
    }

    /// Per-node displacement pairs with zeros on constrained nodes.
    pub fn nodal_displacements(&self, u: &Vector) -> Vec<[f64; 2]> {
        self.dof_map
            .iter()
            .map(|d| d.map(|k| k.map_or(0.0, |k| u[k])))
            .collect()
    }

    /// Consistent nodal forces on every node (constrained ones included) for a
    /// uniform traction in N/m along `direction` on the named edge set.
    pub fn nodal_load(
        &self,
        set: &str,
        traction: f64,
        direction: [f64; 2],
    ) -> Result<Vec<[f64; 2]>> {
        let edges = self
            .mesh
            .edge_sets
            .get(set)
            .ok_or_else(|| Error::NotFound(alloc::format!("edge set '{set}'")))?;
        if edges.is_empty() {
            return Err(Error::invalid("edge set is empty"));
        }
        let norm = direction[0].hypot(direction[1]);
        if !(norm > 0.0) || !traction.is_finite() {
            return Err(Error::invalid(
                "traction direction must be nonzero and amplitude finite",
            ));
        }
        let dir = [direction[0] / norm, direction[1] / norm];
        let mut out = vec![[0.0; 2]; self.mesh.nodes.len()];
        for edge in edges {
            let (a, b) = (self.mesh.nodes[edge[0]], self.mesh.nodes[edge[2]]);
            let length = (b[0] - a[0]).hypot(b[1] - a[1]);
            for (node, w) in edge.iter().zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
                for k in 0..2 {
                    out[*node][k] += w * length * traction * dir[k];
                }
            }
        }
        Ok(out)
    }

    /// [`Self::nodal_load`] restricted to the free dofs.
    pub fn assemble_load_pattern(
        &self,
        set: &str,
        traction: f64,
        direction: [f64; 2],
    ) -> Result<Vector> {
        let nodal = self.nodal_load(set, traction, direction)?;
        let mut f = Vector::zeros(self.ndofs);
        for (node, force) in nodal.iter().enumerate() {
            for k in 0..2 {
                if let Some(d) = self.dof_map[node][k] {
                    f[d] += force[k];
                }
            }
        }
        Ok(f)
    }

    fn gather(&self, e: usize, u: &Vector) -> ElementVector {
        self.element_dofs[e].map(|d| d.map_or(0.0, |k| u[k]))
    }

    fn scatter_vector(&self, e: usize, fe: &ElementVector, f: &mut Vector) {
        for (r, d) in self.element_dofs[e].iter().enumerate() {
            if let Some(k) = d {
                f[*k] += fe[r];
            }
        }
    }

    fn scatter_matrix(&self, e: usize, ke: &ElementMatrix, k: &mut CsrMatrix) {
        let dofs = &self.element_dofs[e];
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
        let mut m = self.pattern.zeros_like();
        for (e, geom) in self.geometry.iter().enumerate() {
            let mut me = tri6::mass(geom);
            me.iter_mut()
                .flatten()
                .for_each(|v| *v *= self.material.density);
            self.scatter_matrix(e, &me, &mut m);
        }
        m
    }
}

impl StructuralModel for FEModel {
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
        check_state(u, self.ndofs)?;
        let mut f = Vector::zeros(self.ndofs);
        for (e, geom) in self.geometry.iter().enumerate() {
            let fe = tri6::internal_force(geom, &self.gather(e, u), &self.elasticity);
            self.scatter_vector(e, &fe, &mut f);
        }
        Ok(f)
    }

    fn tangent_stiffness(&self, u: &Vector) -> Result<CsrMatrix> {
        Ok(self.force_and_stiffness(u)?.1)
    }

    fn force_and_stiffness(&self, u: &Vector) -> Result<(Vector, CsrMatrix)> {
        check_state(u, self.ndofs)?;
        let mut f = Vector::zeros(self.ndofs);
        let mut k = self.pattern.zeros_like();
        for (e, geom) in self.geometry.iter().enumerate() {
            let (fe, ke) = tri6::force_and_tangent(geom, &self.gather(e, u), &self.elasticity);
            self.scatter_vector(e, &fe, &mut f);
            self.scatter_matrix(e, &ke, &mut k);
        }
        Ok((f, k))
    }

    fn load_pattern(&self) -> &Vector {
        &self.load
    }

    fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    fn characteristic_length(&self) -> f64 {
        self.char_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_beam_mesh;
    use crate::numerics::{eig_gsym, factor_spd};

    fn smooth_field(n: usize, scale: f64) -> Vector {
        Vector::from_fn(n, |i, _| {
            scale * ((0.37 * i as f64).sin() + 0.5 * (1.3 * i as f64).cos())
        })
    }

    fn clamped_beam(nx: usize, ny: usize) -> FEModel {
        let mesh = generate_beam_mesh(2.0, 0.05, nx, ny).unwrap();
        FEModel::new(mesh, Material::aluminium(), &["left", "right"]).unwrap()
    }

    #[test]
    fn dof_count_of_the_clamped_beam() {
        let model = clamped_beam(80, 2);
        assert_eq!(model.dofs(), 1590);
        assert!((model.dofs() as f64 - 1614.0).abs() / 1614.0 < 0.05);
    }

    #[test]
    fn total_mass_and_area() {
        let mesh = generate_beam_mesh(2.0, 0.05, 20, 2).unwrap();
        let model = FEModel::new(mesh, Material::aluminium(), &[]).unwrap();
        let ones = Vector::from_element(model.dofs(), 1.0);
        let total = model.mass().bilinear(&ones, &ones);
        assert!((total - 540.0).abs() <= 1e-8 * 540.0);
        assert!((model.area() - 0.1).abs() <= 1e-10 * 0.1);
        assert!(model.mass().asymmetry() <= 1e-12 * model.mass().max_abs());
    }

    #[test]
    fn unloaded_state_and_symmetry() {
        let model = clamped_beam(10, 2);
        let n = model.dofs();
        assert_eq!(model.internal_force(&Vector::zeros(n)).unwrap().amax(), 0.0);
        let k0 = model.linear_stiffness();
        assert!(k0.asymmetry() <= 1e-12 * k0.max_abs());
        assert!(factor_spd(k0).is_ok());
        let k = model.tangent_stiffness(&smooth_field(n, 1e-3)).unwrap();
        assert!(k.asymmetry() <= 1e-12 * k.max_abs());
        assert!(k.same_pattern(k0) && k.same_pattern(model.mass()));
    }

    #[test]
    fn non_finite_displacement_is_rejected() {
        let model = clamped_beam(2, 1);
        let mut u = Vector::zeros(model.dofs());
        u[0] = f64::NAN;
        assert!(matches!(
            model.internal_force(&u),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tangent_matches_central_differences() {
        let model = clamped_beam(6, 2);
        let n = model.dofs();
        let u = smooth_field(n, 1e-3);
        let k = model.tangent_stiffness(&u).unwrap().to_dense();
        let h = 1e-7 * u.amax();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            let mut up = u.clone();
            let mut um = u.clone();
            up[c] += h;
            um[c] -= h;
            let col = (model.internal_force(&up).unwrap() - model.internal_force(&um).unwrap())
                / (2.0 * h);
            let exact = k.column(c);
            worst = worst.max((&col - exact).norm() / exact.norm());
        }
        assert!(worst <= 1e-6, "worst column error {worst}");
    }

    #[test]
    fn taylor_consistency_of_the_force() {
        let model = clamped_beam(6, 2);
        let n = model.dofs();
        let u = smooth_field(n, 1.0);
        let ku = model.linear_stiffness().mul_vec(&u);
        let mut previous = None;
        for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
            let f = model.internal_force(&(&u * eps)).unwrap();
            let err = (&f - &ku * eps).norm() / (eps * ku.norm());
            if let Some(p) = previous {
                let ratio: f64 = p / err;
                assert!((ratio - 10.0).abs() < 0.5, "ratio {ratio}");
            }
            previous = Some(err);
        }
    }

    #[test]
    fn force_is_a_cubic_polynomial() {
        let model = clamped_beam(6, 2);
        let n = model.dofs();
        let u = smooth_field(n, 2e-2);
        let alphas = [0.5, 1.0, 2.0, 3.0, 4.0];
        let samples: Vec<Vector> = alphas
            .iter()
            .map(|&a| model.internal_force(&(&u * a)).unwrap())
            .collect();
        // least-squares fit with basis α, α², α³ (f(0) = 0), checked on all dofs at once
        let a = crate::Matrix::from_fn(5, 3, |r, c| alphas[r].powi(c as i32 + 1));
        let pinv = a.clone().pseudo_inverse(1e-14).unwrap();
        let scale = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        for i in 0..n {
            let y = Vector::from_iterator(5, samples.iter().map(|s| s[i]));
            let c = &pinv * &y;
            let r = &a * c - y;
            assert!(r.norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rigid_translation_is_force_free() {
        let mesh = generate_beam_mesh(2.0, 0.05, 8, 2).unwrap();
        let model = FEModel::new(mesh, Material::aluminium(), &[]).unwrap();
        let n = model.dofs();
        let u = Vector::from_fn(n, |i, _| if i % 2 == 0 { 0.3 } else { -0.2 });
        let f = model.internal_force(&u).unwrap();
        assert!(f.norm() <= 1e-9 * model.linear_stiffness().frobenius_norm() * u.norm());
    }

    #[test]
    fn load_totals() {
        let beam = clamped_beam(80, 2);
        let nodal = beam.nodal_load("top", 5e5, [0.0, -1.0]).unwrap();
        let total: f64 = nodal.iter().map(|f| f[1]).sum();
        assert!((total + 1e6).abs() <= 1e-10 * 1e6);
        assert!(nodal.iter().all(|f| f[0] == 0.0));
        let zero = beam.assemble_load_pattern("top", 0.0, [0.0, -1.0]).unwrap();
        assert_eq!(zero.amax(), 0.0);

        let mesh = generate_beam_mesh(2.0, 0.05, 40, 2).unwrap();
        let cantilever = FEModel::new(mesh, Material::aluminium(), &["left"]).unwrap();
        let f = cantilever
            .assemble_load_pattern("right", 3e6, [0.0, 1.0])
            .unwrap();
        assert!((f.sum() - 1.5e5).abs() <= 1e-10 * 1.5e5);
        assert!(matches!(
            cantilever.assemble_load_pattern("front", 1.0, [0.0, 1.0]),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn unknown_constraint_set() {
        let mesh = generate_beam_mesh(1.0, 0.1, 2, 1).unwrap();
        assert!(matches!(
            FEModel::new(mesh, Material::aluminium(), &["nowhere"]),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn rayleigh_damping() {
        let model = clamped_beam(4, 1).with_rayleigh(2.0, 1e-5).unwrap();
        let c = model.damping().unwrap();
        let expected = model.mass().get(3, 3) * 2.0 + model.linear_stiffness().get(3, 3) * 1e-5;
        assert!((c.get(3, 3) - expected).abs() <= 1e-12 * expected.abs());
        assert!(clamped_beam(4, 1)
            .with_rayleigh(0.0, 0.0)
            .unwrap()
            .damping()
            .is_none());
    }

    #[test]
    fn lowest_frequency_is_near_the_beam_value() {
        let model = clamped_beam(40, 2);
        let e = eig_gsym(model.linear_stiffness(), model.mass(), 1).unwrap();
        let f1 = e.frequencies_hz()[0];
        assert!((f1 - 65.2).abs() / 65.2 < 0.05, "{f1}");
    }
}
