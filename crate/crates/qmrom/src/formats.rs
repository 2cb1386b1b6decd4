//! CSV schemas of the run artifacts.
//!
//! | file | columns |
//! |------|---------|
//! | `trajectory.csv` | `t, z_1 … z_n` (generalized coordinates; full-order runs store displacements) |
//! | `probe.csv` | `t, u` (probe displacement) |
//! | `error_report.csv` | `reduced_dofs`, then one column per method; cells hold GRE_M, `diverged` or `failed` |
//! | `singular_values.csv` | `method, modes, k, sigma, retained` |
//! | `coupling.csv` | `i, j, ratio` (1-based pair indices) |
//! | `coupling_series.csv` | `t`, then `q_i_j` and `c_i_j` per pair (reconstructed and predicted amplitudes) |
//! | `frequencies.csv` | `k, omega_sq, frequency_hz` |
//! | `mode_shapes.csv` | `dof, node, component, x, y, phi_1 … phi_k` |
//! | `basis.csv`, `theta.csv` | `dof`, then one column per basis vector or packed `θ_ij` |

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use csv::Writer;

use qmrom_core::basis::{pairs, QuadTensor};
use qmrom_core::integrate::Trajectory;
use qmrom_core::methods::Method;
use qmrom_core::metrics::{Amplitudes, CouplingReport, ErrorReport, Outcome};
use qmrom_core::scenarios::BuiltModel;
use qmrom_core::Matrix;

fn writer(path: &Path) -> Result<Writer<File>> {
    Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

fn finish(mut w: Writer<File>, path: &Path) -> Result<()> {
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let n = trajectory.states.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("z_{i}")));
    w.write_record(&header)?;
    for (t, z) in trajectory.times.iter().zip(&trajectory.states) {
        w.write_record(std::iter::once(num(*t)).chain(z.iter().map(|&v| num(v))))?;
    }
    finish(w, path)
}

pub fn write_probe(path: &Path, trajectory: &Trajectory, dof: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "u"])?;
    for (t, u) in trajectory.times.iter().zip(&trajectory.displacements) {
        w.write_record([num(*t), num(u[dof])])?;
    }
    finish(w, path)
}

fn cell(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Error { gre_m } => num(*gre_m),
        Outcome::Diverged { .. } => "diverged".into(),
        Outcome::Failed { .. } => "failed".into(),
    }
}

/// Rows keyed by reduced dof count, one column per method.
pub fn write_error_report(path: &Path, report: &ErrorReport) -> Result<()> {
    let methods: BTreeSet<Method> = report.entries.iter().map(|e| e.method).collect();
    let mut rows: BTreeMap<usize, BTreeMap<Method, String>> = BTreeMap::new();
    for e in &report.entries {
        rows.entry(e.reduced_dofs)
            .or_default()
            .insert(e.method, cell(&e.outcome));
    }
    let mut w = writer(path)?;
    let mut header = vec!["reduced_dofs".to_string()];
    header.extend(methods.iter().map(|m| m.name().to_string()));
    w.write_record(&header)?;
    for (dofs, cells) in &rows {
        let mut record = vec![dofs.to_string()];
        record.extend(
            methods
                .iter()
                .map(|m| cells.get(m).cloned().unwrap_or_default()),
        );
        w.write_record(&record)?;
    }
    finish(w, path)
}

/// One deflation spectrum per `(method, modes)`, with the retained count.
pub struct Spectrum<'a> {
    pub method: Method,
    pub modes: usize,
    pub values: &'a [f64],
    pub retained: usize,
}

pub fn write_singular_values(path: &Path, spectra: &[Spectrum<'_>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["method", "modes", "k", "sigma", "retained"])?;
    for s in spectra {
        for (k, &sigma) in s.values.iter().enumerate() {
            w.write_record([
                s.method.name().to_string(),
                s.modes.to_string(),
                (k + 1).to_string(),
                num(sigma),
                (k < s.retained).to_string(),
            ])?;
        }
    }
    finish(w, path)
}

pub fn write_coupling(path: &Path, report: &CouplingReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "ratio"])?;
    for (&(i, j), &ratio) in report.pairs.iter().zip(&report.ratios) {
        w.write_record([(i + 1).to_string(), (j + 1).to_string(), num(ratio)])?;
    }
    finish(w, path)
}

/// Reconstructed `q_ij(t)` beside the products `c_ij(t)` a quadratic manifold would impose.
pub fn write_coupling_series(path: &Path, times: &[f64], amplitudes: &Amplitudes) -> Result<()> {
    let prs: Vec<(usize, usize)> = pairs(amplitudes.n).collect();
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    for &(i, j) in &prs {
        header.push(format!("q_{}_{}", i + 1, j + 1));
        header.push(format!("c_{}_{}", i + 1, j + 1));
    }
    w.write_record(&header)?;
    for ((t, z), q) in times
        .iter()
        .zip(&amplitudes.linear)
        .zip(&amplitudes.quadratic)
    {
        let mut record = vec![num(*t)];
        for (p, &(i, j)) in prs.iter().enumerate() {
            let c = if i == j {
                0.5 * z[i] * z[i]
            } else {
                z[i] * z[j]
            };
            record.push(num(q[p]));
            record.push(num(c));
        }
        w.write_record(&record)?;
    }
    finish(w, path)
}

pub fn write_frequencies(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["k", "omega_sq", "frequency_hz"])?;
    for (k, &l) in eigenvalues.iter().enumerate() {
        let f = l.max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
        w.write_record([(k + 1).to_string(), num(l), num(f)])?;
    }
    finish(w, path)
}

/// Node, component and coordinates of every free dof.
pub fn dof_locations(model: &BuiltModel) -> Vec<(usize, usize, [f64; 2])> {
    let mut out = Vec::new();
    match model {
        BuiltModel::Continuum(m) => {
            for (node, &xy) in m.mesh().nodes.iter().enumerate() {
                for comp in 0..2 {
                    if let Some(d) = m.dof(node, comp) {
                        out.push((d, node, comp, xy));
                    }
                }
            }
        }
        BuiltModel::VonKarman(m) => {
            for node in 0..=m.element_count() {
                for comp in 0..3 {
                    if let Some(d) = m.dof(node, comp) {
                        out.push((d, node, comp, [m.node_x(node), 0.0]));
                    }
                }
            }
        }
    }
    out.sort_by_key(|e| e.0);
    out.into_iter()
        .map(|(_, node, comp, xy)| (node, comp, xy))
        .collect()
}

pub fn write_mode_shapes(path: &Path, model: &BuiltModel, vectors: &Matrix) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["dof", "node", "component", "x", "y"]
        .map(String::from)
        .to_vec();
    header.extend((1..=vectors.ncols()).map(|k| format!("phi_{k}")));
    w.write_record(&header)?;
    for (dof, (node, comp, [x, y])) in dof_locations(model).into_iter().enumerate() {
        let mut record = vec![
            dof.to_string(),
            node.to_string(),
            comp.to_string(),
            num(x),
            num(y),
        ];
        record.extend(vectors.row(dof).iter().map(|&v| num(v)));
        w.write_record(&record)?;
    }
    finish(w, path)
}

pub fn write_basis(path: &Path, v: &Matrix) -> Result<()> {
    let names: Vec<String> = (1..=v.ncols()).map(|k| format!("v_{k}")).collect();
    write_columns(path, &names, v)
}

pub fn write_theta(path: &Path, theta: &QuadTensor) -> Result<()> {
    let names: Vec<String> = pairs(theta.n())
        .map(|(i, j)| format!("theta_{}_{}", i + 1, j + 1))
        .collect();
    write_columns(path, &names, theta.packed())
}

fn write_columns(path: &Path, names: &[String], data: &Matrix) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(std::iter::once("dof").chain(names.iter().map(String::as_str)))?;
    for (dof, row) in data.row_iter().enumerate() {
        w.write_record(std::iter::once(dof.to_string()).chain(row.iter().map(|&v| num(v))))?;
    }
    finish(w, path)
}

/// Plotting script for `error_report.csv`, GRE_M against reduced dofs.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot GRE_M against the number of reduced dofs from error_report.csv."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1] if len(sys.argv) > 1 else "error_report.csv"
table = pd.read_csv(path, index_col="reduced_dofs")
fig, ax = plt.subplots()
for method in table.columns:
    values = pd.to_numeric(table[method], errors="coerce").dropna()
    if not values.empty:
        ax.semilogy(values.index, values.values, marker="o", label=method)
ax.set_xlabel("reduced dofs")
ax.set_ylabel("GRE_M")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"#;
