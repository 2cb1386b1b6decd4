//! The closed set of reduction methods and their construction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::basis::{
    deflate_basis, krylov_mode_mix, krylov_modes, modal_derivatives, orthogonalize_theta,
    static_derivatives, static_modal_derivatives, vibration_modes, FdOptions, ReductionBasis,
    DEFAULT_RHO,
};
use crate::fem::StructuralModel;
use crate::integrate::{hht_run, IntegratorConfig, Trajectory};
use crate::rom::{FullSystem, QuadraticManifold, ReducedModel, Reduction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "linearized")]
    Linearized,
    #[serde(rename = "QM-MD")]
    QmMd,
    #[serde(rename = "QM-SMD")]
    QmSmd,
    #[serde(rename = "QM-KrySD")]
    QmKrySd,
    #[serde(rename = "QM-KrySD-SMD")]
    QmKrySdSmd,
    #[serde(rename = "QM-SMD-orth")]
    QmSmdOrth,
    #[serde(rename = "QM-KrySD-orth")]
    QmKrySdOrth,
    #[serde(rename = "QM-Kry-SMD-orth")]
    QmKrySmdOrth,
    #[serde(rename = "LB-MD")]
    LbMd,
    #[serde(rename = "LB-SMD")]
    LbSmd,
    #[serde(rename = "LB-KrySD")]
    LbKrySd,
    #[serde(rename = "LB-KrySD-SMD")]
    LbKrySdSmd,
}

/// Linear part of a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearPart {
    Modes,
    Krylov,
    Mixed,
}

/// Quadratic part of a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivatives {
    Modal,
    Static,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Linearized,
        Method::QmMd,
        Method::QmSmd,
        Method::QmKrySd,
        Method::QmKrySdSmd,
        Method::QmSmdOrth,
        Method::QmKrySdOrth,
        Method::QmKrySmdOrth,
        Method::LbMd,
        Method::LbSmd,
        Method::LbKrySd,
        Method::LbKrySdSmd,
        Method::Full,
    ];

    /// Every method except the full reference.
    pub fn reduced() -> impl Iterator<Item = Method> {
        Self::ALL.into_iter().filter(|m| *m != Method::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Linearized => "linearized",
            Method::QmMd => "QM-MD",
            Method::QmSmd => "QM-SMD",
            Method::QmKrySd => "QM-KrySD",
            Method::QmKrySdSmd => "QM-KrySD-SMD",
            Method::QmSmdOrth => "QM-SMD-orth",
            Method::QmKrySdOrth => "QM-KrySD-orth",
            Method::QmKrySmdOrth => "QM-Kry-SMD-orth",
            Method::LbMd => "LB-MD",
            Method::LbSmd => "LB-SMD",
            Method::LbKrySd => "LB-KrySD",
            Method::LbKrySdSmd => "LB-KrySD-SMD",
        }
    }

    pub fn is_quadratic(self) -> bool {
        matches!(
            self,
            Method::QmMd
                | Method::QmSmd
                | Method::QmKrySd
                | Method::QmKrySdSmd
                | Method::QmSmdOrth
                | Method::QmKrySdOrth
                | Method::QmKrySmdOrth
        )
    }

    pub fn is_linear_basis(self) -> bool {
        matches!(
            self,
            Method::LbMd | Method::LbSmd | Method::LbKrySd | Method::LbKrySdSmd
        )
    }

    /// Whether the mode count parameterizes this method.
    pub fn is_reduced(self) -> bool {
        self.is_quadratic() || self.is_linear_basis()
    }

    pub fn orthogonalized(self) -> bool {
        matches!(
            self,
            Method::QmSmdOrth | Method::QmKrySdOrth | Method::QmKrySmdOrth
        )
    }

    pub fn ingredients(self) -> Option<(LinearPart, Derivatives)> {
        use Derivatives::*;
        use LinearPart::*;
        Some(match self {
            Method::Full | Method::Linearized => return None,
            Method::QmMd | Method::LbMd => (Modes, Modal),
            Method::QmSmd | Method::QmSmdOrth | Method::LbSmd => (Modes, Static),
            Method::QmKrySd | Method::QmKrySdOrth | Method::LbKrySd => (Krylov, Static),
            Method::QmKrySdSmd | Method::QmKrySmdOrth | Method::LbKrySdSmd => (Mixed, Static),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::NotFound(alloc::format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub fd: FdOptions,
    /// Deflation and mixed-basis tolerance.
    pub rho: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            fd: FdOptions::default(),
            rho: DEFAULT_RHO,
        }
    }
}

/// A method instantiated for one model and mode count.
#[derive(Debug, Clone)]
pub struct Plan {
    pub method: Method,
    pub modes: usize,
    /// `None` for the full and linearized full-order systems.
    pub reduction: Option<Reduction>,
    /// Deflation spectrum of linear-basis methods.
    pub singular_values: Vec<f64>,
}

impl Plan {
    pub fn reduced_dofs(&self, model: &dyn StructuralModel) -> usize {
        self.reduction.as_ref().map_or(model.dofs(), |r| r.size())
    }
}

fn linear_part(
    model: &dyn StructuralModel,
    part: LinearPart,
    n: usize,
    rho: f64,
) -> Result<ReductionBasis> {
    match part {
        LinearPart::Modes => vibration_modes(model, n),
        LinearPart::Krylov => krylov_modes(model, model.load_pattern(), n),
        LinearPart::Mixed => krylov_mode_mix(model, model.load_pattern(), n, rho),
    }
}

/// Builds the reduction of `method` with `n` modes or Krylov vectors.
pub fn plan(
    model: &dyn StructuralModel,
    method: Method,
    n: usize,
    opts: &BuildOptions,
) -> Result<Plan> {
    let Some((part, derivatives)) = method.ingredients() else {
        return Ok(Plan {
            method,
            modes: n,
            reduction: None,
            singular_values: Vec::new(),
        });
    };
    if n == 0 {
        return Err(Error::invalid("reduced methods need at least one mode"));
    }
    let basis = linear_part(model, part, n, opts.rho)?;
    let theta = match derivatives {
        Derivatives::Modal => modal_derivatives(model, &basis, &opts.fd)?,
        Derivatives::Static if part == LinearPart::Modes => {
            static_modal_derivatives(model, &basis, &opts.fd)?
        }
        Derivatives::Static => static_derivatives(model, &basis.v, &opts.fd)?,
    };
    if method.is_linear_basis() {
        let d = deflate_basis(&basis.v, Some(&theta), opts.rho)?;
        return Ok(Plan {
            method,
            modes: n,
            reduction: Some(Reduction::Linear(d.basis)),
            singular_values: d.singular_values,
        });
    }
    let theta = if method.orthogonalized() {
        orthogonalize_theta(&theta, &basis.v)?
    } else {
        theta
    };
    let manifold = QuadraticManifold::new(basis.v, theta)?;
    Ok(Plan {
        method,
        modes: n,
        reduction: Some(Reduction::Quadratic(manifold)),
        singular_values: Vec::new(),
    })
}

/// Outcome of integrating one plan.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub plan: Plan,
    pub reduced_dofs: usize,
    pub trajectory: Trajectory,
}

/// Integrates the system described by `plan`.
pub fn integrate_plan(
    model: &dyn StructuralModel,
    plan: Plan,
    config: &IntegratorConfig,
) -> Result<MethodRun> {
    let reduced_dofs = plan.reduced_dofs(model);
    let trajectory = match (&plan.reduction, plan.method) {
        (None, Method::Linearized) => hht_run(&FullSystem::linearized(model), config)?,
        (None, _) => hht_run(&FullSystem::nonlinear(model), config)?,
        (Some(r), _) => hht_run(&ReducedModel::new(model, r.clone())?, config)?,
    };
    Ok(MethodRun {
        plan,
        reduced_dofs,
        trajectory,
    })
}

/// [`plan`] followed by [`integrate_plan`].
pub fn run_method(
    model: &dyn StructuralModel,
    method: Method,
    n: usize,
    opts: &BuildOptions,
    config: &IntegratorConfig,
) -> Result<MethodRun> {
    integrate_plan(model, plan(model, method, n, opts)?, config)
}

/// Parses a comma-separated list, where `all` expands to every method.
pub fn parse_method_list(list: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Method::reduced());
        } else {
            out.push(item.parse()?);
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::invalid(String::from("empty method list")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FEModel, Forcing, Material};
    use crate::mesh::generate_beam_mesh;
    use crate::numerics::CsrMatrix;
    use crate::Matrix;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                alloc::format!("\"{}\"", m.name())
            );
        }
        assert!("QM-XYZ".parse::<Method>().is_err());
        assert_eq!(Method::reduced().count(), 12);
        assert_eq!(parse_method_list("all").unwrap().len(), 12);
        assert_eq!(
            parse_method_list("LB-SMD, QM-SMD,LB-SMD").unwrap(),
            vec![Method::QmSmd, Method::LbSmd]
        );
    }

    fn beam() -> FEModel {
        let mesh = generate_beam_mesh(2.0, 0.05, 12, 2).unwrap();
        let model = FEModel::new(mesh, Material::aluminium(), &["left", "right"]).unwrap();
        let f = model
            .assemble_load_pattern("top", 5e5, [0.0, -1.0])
            .unwrap();
        model
            .with_load(f, Forcing::sines(&[(1.0, 72.0), (1.0, 100.0)]))
            .unwrap()
    }

    #[test]
    fn every_method_builds() {
        let model = beam();
        let opts = BuildOptions::default();
        for m in Method::ALL {
            let p = plan(&model, m, 4, &opts).unwrap();
            match m {
                Method::Full | Method::Linearized => assert!(p.reduction.is_none()),
                _ if m.is_linear_basis() => {
                    let Some(Reduction::Linear(v)) = &p.reduction else {
                        panic!("{m}")
                    };
                    assert!(v.ncols() > 4 && v.ncols() <= 14, "{m}: {}", v.ncols());
                    assert!(
                        (v.transpose() * v - Matrix::identity(v.ncols(), v.ncols())).amax() < 1e-10
                    );
                }
                _ => {
                    let Some(Reduction::Quadratic(q)) = &p.reduction else {
                        panic!("{m}")
                    };
                    assert_eq!(q.n(), 4);
                    assert_eq!(q.theta().is_orthogonalized(), m.orthogonalized());
                }
            }
        }
    }

    #[test]
    fn short_runs_complete() {
        let model = beam();
        let cfg = IntegratorConfig {
            t_end: 2e-3,
            ..Default::default()
        };
        let opts = BuildOptions::default();
        let full = run_method(&model, Method::Full, 0, &opts, &cfg).unwrap();
        assert!(full.trajectory.is_completed());
        assert_eq!(full.trajectory.len(), 21);
        let lb = run_method(&model, Method::LbSmd, 3, &opts, &cfg).unwrap();
        assert!(lb.trajectory.is_completed());
        assert_eq!(lb.reduced_dofs, lb.plan.reduction.as_ref().unwrap().size());
        let m: &CsrMatrix = crate::fem::StructuralModel::mass(&model);
        let e = crate::metrics::gre_m(&lb.trajectory, &full.trajectory, m).unwrap();
        assert!(e < 0.5, "{e}");
    }
}
