//! Scenario files, probe strings and configuration hashes.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qmrom_core::fem::{Forcing, Material};
use qmrom_core::integrate::IntegratorConfig;
use qmrom_core::scenarios::{builtin, Geometry, Load, Probe, ScenarioConfig};

/// Reads a scenario from a `.json` file or, for any other extension, TOML.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: ScenarioConfig = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        _ => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
    };
    config
        .validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(config)
}

/// A built-in scenario by name or a scenario file, whichever is given.
pub fn resolve(scenario: Option<&str>, path: Option<&Path>) -> Result<ScenarioConfig> {
    match (scenario, path) {
        (Some(name), None) => Ok(builtin(name)?),
        (None, Some(path)) => load_config(path),
        _ => bail!("exactly one of --scenario and --config is required"),
    }
}

pub fn to_toml(config: &ScenarioConfig) -> Result<String> {
    Ok(toml::to_string_pretty(config)?)
}

/// Parses `"x,y,component"` with component `0`/`x` or `1`/`y`.
pub fn parse_probe(text: &str) -> Result<Probe> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [x, y, c] = parts.as_slice() else {
        bail!("probe must be \"x,y,component\", got \"{text}\"");
    };
    let component = match *c {
        "0" | "x" => 0,
        "1" | "y" => 1,
        other => bail!("probe component must be 0, 1, x or y, got \"{other}\""),
    };
    let x: f64 = x
        .parse()
        .with_context(|| format!("probe x coordinate \"{x}\""))?;
    let y: f64 = y
        .parse()
        .with_context(|| format!("probe y coordinate \"{y}\""))?;
    if !(x.is_finite() && y.is_finite()) {
        bail!("probe coordinates must be finite");
    }
    Ok(Probe { x, y, component })
}

fn digest(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration types serialize to JSON");
    hex::encode(Sha256::digest(&bytes))
}

/// SHA-256 of the whole resolved configuration.
pub fn config_hash(config: &ScenarioConfig) -> String {
    digest(config)
}

#[derive(Serialize)]
struct ReferenceInputs<'a> {
    version: &'a str,
    geometry: &'a Geometry,
    material: &'a Material,
    constrained: &'a [String],
    load: &'a Load,
    forcing: &'a Forcing,
    rayleigh: [f64; 2],
    integrator: &'a IntegratorConfig,
}

/// Hash of the inputs that determine the full-order reference trajectory.
pub fn reference_key(config: &ScenarioConfig) -> String {
    digest(&ReferenceInputs {
        version: env!("CARGO_PKG_VERSION"),
        geometry: &config.geometry,
        material: &config.material,
        constrained: &config.constrained,
        load: &config.load,
        forcing: &config.forcing,
        rayleigh: config.rayleigh,
        integrator: &config.integrator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmrom_core::methods::Method;
    use qmrom_core::scenarios::{beam_cc, builtin_scenarios};

    #[test]
    fn probe_strings() {
        assert_eq!(
            parse_probe("1.0, 0.025, y").unwrap(),
            Probe {
                x: 1.0,
                y: 0.025,
                component: 1
            }
        );
        assert_eq!(parse_probe("0,0,0").unwrap().component, 0);
        for bad in ["1,2", "1,2,z", "a,0,1", "1,2,3,4", "inf,0,1"] {
            assert!(parse_probe(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn every_builtin_survives_toml() {
        for config in builtin_scenarios() {
            let text = to_toml(&config).unwrap();
            let back: ScenarioConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, config, "{}", config.name);
        }
    }

    #[test]
    fn reference_key_ignores_method_choices() {
        let a = beam_cc();
        let mut b = a.clone();
        b.methods = vec![Method::QmSmd];
        b.mode_counts = vec![3];
        b.name = "renamed".into();
        assert_eq!(reference_key(&a), reference_key(&b));
        assert_ne!(config_hash(&a), config_hash(&b));
        let mut c = a.clone();
        c.integrator.t_end = 0.1;
        assert_ne!(reference_key(&a), reference_key(&c));
    }

    #[test]
    fn resolve_requires_one_source() {
        assert!(resolve(None, None).is_err());
        assert!(resolve(Some("nope"), None).is_err());
        assert_eq!(resolve(Some("beam_cc"), None).unwrap(), beam_cc());
    }
}
