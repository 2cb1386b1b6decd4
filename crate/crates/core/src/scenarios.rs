//! Declarative experiment definitions and the built-in presets.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::fem::{FEModel, Forcing, Material, StructuralModel, VkBeamModel, VkSupport};
use crate::integrate::IntegratorConfig;
use crate::mesh::{generate_arch_mesh_with, generate_beam_mesh, ArchSpan, Mesh};
use crate::methods::{BuildOptions, Method};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Straight beam `[0, length] × [0, height]` of tri6 elements.
    Beam {
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    /// Circular arch of tri6 elements with its lower surface starting at the origin.
    Arch {
        span: f64,
        thickness: f64,
        radius: f64,
        nx: usize,
        ny: usize,
        #[serde(default)]
        span_kind: ArchSpan,
    },
    /// Two-node von Kármán beam elements.
    VkBeam {
        length: f64,
        height: f64,
        elements: usize,
        support: VkSupport,
    },
}

/// Line load of `traction` N/m along `direction`, applied on an edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub edge_set: String,
    pub traction: f64,
    pub direction: [f64; 2],
}

/// Point whose displacement component is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub x: f64,
    pub y: f64,
    /// 0 = x, 1 = y.
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub geometry: Geometry,
    pub material: Material,
    /// Clamped edge sets; ignored by the von Kármán beam, which uses its support.
    #[serde(default)]
    pub constrained: Vec<String>,
    pub load: Load,
    pub forcing: Forcing,
    /// Rayleigh coefficients `(a, b)` of `C = aM + bK₀`.
    #[serde(default)]
    pub rayleigh: [f64; 2],
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub build: BuildOptions,
    pub methods: Vec<Method>,
    pub mode_counts: Vec<usize>,
    pub probe: Probe,
}

/// A model built from a scenario.
#[allow(clippy::large_enum_variant)]
pub enum BuiltModel {
    Continuum(FEModel),
    VonKarman(VkBeamModel),
}

impl BuiltModel {
    pub fn as_model(&self) -> &dyn StructuralModel {
        match self {
            BuiltModel::Continuum(m) => m,
            BuiltModel::VonKarman(m) => m,
        }
    }

    /// Free dof of the node closest to the probe point, if that component is free.
    pub fn probe_dof(&self, probe: &Probe) -> Option<usize> {
        match self {
            BuiltModel::Continuum(m) => {
                let node = m.mesh().nearest_node([probe.x, probe.y])?;
                m.dof(node, probe.component)
            }
            BuiltModel::VonKarman(m) => {
                let n = m.element_count();
                let node = (0..=n).min_by(|&a, &b| {
                    (m.node_x(a) - probe.x)
                        .abs()
                        .total_cmp(&(m.node_x(b) - probe.x).abs())
                })?;
                m.dof(node, if probe.component == 0 { 0 } else { 1 })
            }
        }
    }
}

impl ScenarioConfig {
    pub fn mesh(&self) -> Result<Option<Mesh>> {
        match &self.geometry {
            Geometry::Beam {
                length,
                height,
                nx,
                ny,
            } => generate_beam_mesh(*length, *height, *nx, *ny).map(Some),
            Geometry::Arch {
                span,
                thickness,
                radius,
                nx,
                ny,
                span_kind,
            } => {
                generate_arch_mesh_with(*span, *thickness, *radius, *nx, *ny, *span_kind).map(Some)
            }
            Geometry::VkBeam { .. } => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(alloc::format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.material.validate()?;
        self.forcing.validate()?;
        self.integrator.schedule()?;
        if self.mode_counts.contains(&0) {
            return Err(Error::invalid("mode counts must be positive"));
        }
        if !self.load.traction.is_finite() || self.load.direction.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("load must be finite"));
        }
        if self.probe.component > 1 {
            return Err(Error::invalid("probe component must be 0 (x) or 1 (y)"));
        }
        if let Some(mesh) = self.mesh()? {
            for set in self
                .constrained
                .iter()
                .chain(core::iter::once(&self.load.edge_set))
            {
                if !mesh.edge_sets.contains_key(set) {
                    return Err(Error::NotFound(alloc::format!("edge set '{set}'")));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<BuiltModel> {
        self.validate()?;
        let [a, b] = self.rayleigh;
        match &self.geometry {
            Geometry::VkBeam {
                length,
                height,
                elements,
                support,
            } => {
                let model =
                    VkBeamModel::new(*length, *height, *elements, &self.material, *support)?;
                let q = self.load.traction * self.load.direction[1];
                let f = model.uniform_load(q);
                Ok(BuiltModel::VonKarman(
                    model
                        .with_load(f, self.forcing.clone())?
                        .with_rayleigh(a, b)?,
                ))
            }
            _ => {
                let mesh = self.mesh()?.expect("continuum geometry");
                let sets: Vec<&str> = self.constrained.iter().map(String::as_str).collect();
                let model = FEModel::new(mesh, self.material, &sets)?;
                let f = model.assemble_load_pattern(
                    &self.load.edge_set,
                    self.load.traction,
                    self.load.direction,
                )?;
                Ok(BuiltModel::Continuum(
                    model
                        .with_load(f, self.forcing.clone())?
                        .with_rayleigh(a, b)?,
                ))
            }
        }
    }

    /// Same experiment with `t_end = 0.05 s` and half the elements along the span.
    pub fn desk(&self) -> Self {
        let mut out = self.clone();
        out.name = alloc::format!("{}_desk", self.name);
        out.integrator.t_end = 0.05;
        match &mut out.geometry {
            Geometry::Beam { nx, .. } | Geometry::Arch { nx, .. } => *nx = (*nx).div_ceil(2),
            Geometry::VkBeam { elements, .. } => *elements = (*elements).div_ceil(2),
        }
        out
    }
}

fn beam_integrator() -> IntegratorConfig {
    IntegratorConfig {
        alpha: 0.1,
        dt: 1e-4,
        t_end: 0.2,
        dt_save: 1e-4,
        ..Default::default()
    }
}

fn paper_methods() -> Vec<Method> {
    Method::reduced().collect()
}

/// Clamped-clamped beam, 2 m × 5 cm.
pub fn beam_cc() -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: "beam_cc".to_string(),
        geometry: Geometry::Beam {
            length: 2.0,
            height: 0.05,
            nx: 80,
            ny: 2,
        },
        material: Material::aluminium(),
        constrained: alloc::vec!["left".to_string(), "right".to_string()],
        load: Load {
            edge_set: "top".to_string(),
            traction: 5e5,
            direction: [0.0, -1.0],
        },
        forcing: Forcing::sines(&[(1.0, 72.0), (1.0, 100.0)]),
        rayleigh: [0.0, 0.0],
        integrator: beam_integrator(),
        build: BuildOptions::default(),
        methods: paper_methods(),
        mode_counts: alloc::vec![5, 10, 15, 20],
        probe: Probe {
            x: 1.0,
            y: 0.025,
            component: 1,
        },
    }
}

/// Clamped-clamped circular arch of radius 8 m over a 2 m chord.
pub fn arch() -> ScenarioConfig {
    let (span, thickness, radius) = (2.0, 0.05, 8.0);
    let rise = radius - (radius * radius - 0.25 * span * span).sqrt();
    ScenarioConfig {
        name: "arch".to_string(),
        geometry: Geometry::Arch {
            span,
            thickness,
            radius,
            nx: 82,
            ny: 2,
            span_kind: ArchSpan::Chord,
        },
        load: Load {
            edge_set: "top".to_string(),
            traction: 3e5,
            direction: [0.0, -1.0],
        },
        forcing: Forcing::sines(&[(1.0, 115.0), (1.0, 150.0)]),
        probe: Probe {
            x: 0.5 * span,
            y: rise + 0.5 * thickness,
            component: 1,
        },
        ..beam_cc()
    }
}

/// The clamped-clamped beam with only the left end clamped and a tip traction.
pub fn cantilever() -> ScenarioConfig {
    ScenarioConfig {
        name: "cantilever".to_string(),
        constrained: alloc::vec!["left".to_string()],
        load: Load {
            edge_set: "right".to_string(),
            traction: 3e6,
            direction: [0.0, -1.0],
        },
        forcing: Forcing::sines(&[(1.0, 20.0), (1.0, 48.0)]),
        probe: Probe {
            x: 2.0,
            y: 0.025,
            component: 1,
        },
        ..beam_cc()
    }
}

/// `beam_cc` on von Kármán beam elements.
pub fn beam_cc_vk() -> ScenarioConfig {
    ScenarioConfig {
        name: "beam_cc_vk".to_string(),
        geometry: Geometry::VkBeam {
            length: 2.0,
            height: 0.05,
            elements: 80,
            support: VkSupport::ClampedClamped,
        },
        constrained: Vec::new(),
        ..beam_cc()
    }
}

/// Every built-in scenario with its desk variant.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let base = [beam_cc(), arch(), cantilever(), beam_cc_vk()];
    let mut out = base.to_vec();
    out.extend(base.iter().map(ScenarioConfig::desk));
    out
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::NotFound(alloc::format!("unknown scenario '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_values() {
        let b = beam_cc();
        assert_eq!(b.load.traction, 5e5);
        assert_eq!(b.forcing, Forcing::sines(&[(1.0, 72.0), (1.0, 100.0)]));
        assert_eq!(
            (
                b.integrator.dt,
                b.integrator.t_end,
                b.integrator.dt_save,
                b.integrator.alpha
            ),
            (1e-4, 0.2, 1e-4, 0.1)
        );
        assert_eq!(
            b.material,
            Material {
                youngs_modulus: 70e9,
                poisson_ratio: 0.3,
                density: 2700.0,
                thickness: 1.0
            }
        );
        let a = arch();
        assert_eq!(a.load.traction, 3e5);
        assert_eq!(a.forcing, Forcing::sines(&[(1.0, 115.0), (1.0, 150.0)]));
        let c = cantilever();
        assert_eq!(c.load.traction, 3e6);
        assert_eq!(c.constrained, vec!["left".to_string()]);
        assert_eq!(c.forcing, Forcing::sines(&[(1.0, 20.0), (1.0, 48.0)]));
        assert_eq!(b.methods.len(), 12);
    }

    #[test]
    fn desk_variants_truncate() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        for n in [
            "beam_cc",
            "arch",
            "cantilever",
            "beam_cc_vk",
            "beam_cc_desk",
            "arch_desk",
            "cantilever_desk",
            "beam_cc_vk_desk",
        ] {
            assert!(names.iter().any(|x| x == n), "{n}");
        }
        let d = builtin("beam_cc_desk").unwrap();
        assert_eq!(d.integrator.t_end, 0.05);
        assert_eq!(d.forcing, beam_cc().forcing);
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn every_builtin_validates_and_builds() {
        for s in builtin_scenarios()
            .into_iter()
            .filter(|s| s.name.ends_with("_desk"))
        {
            let built = s.build().unwrap();
            let model = built.as_model();
            assert!(model.load_pattern().amax() > 0.0, "{}", s.name);
            assert!(built.probe_dof(&s.probe).is_some(), "{}", s.name);
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut s = beam_cc();
        s.load.edge_set = "middle".to_string();
        assert!(matches!(s.validate(), Err(Error::NotFound(_))));
        let mut s = beam_cc();
        s.schema_version = 7;
        assert!(s.validate().is_err());
        let mut s = beam_cc();
        s.forcing = Forcing::sines(&[(1.0, -3.0)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn serialization_round_trip() {
        for s in builtin_scenarios() {
            let text = serde_json::to_string(&s).unwrap();
            let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }
}
