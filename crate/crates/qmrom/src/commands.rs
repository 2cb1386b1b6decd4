//! The `run`, `compare` and `modes` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use qmrom_core::basis::{static_modal_derivatives, vibration_modes};
use qmrom_core::fem::StructuralModel;
use qmrom_core::integrate::{Status, Trajectory};
use qmrom_core::methods::{integrate_plan, plan, Method, Plan};
use qmrom_core::metrics::{
    coupling_report, reconstruct_amplitudes, ErrorEntry, ErrorReport, Outcome,
};
use qmrom_core::numerics::eig_gsym;
use qmrom_core::rom::Reduction;
use qmrom_core::scenarios::{BuiltModel, ScenarioConfig};

use crate::cache::ReferenceCache;
use crate::config::reference_key;
use crate::formats::{self, Spectrum};
use crate::metadata::RunMetadata;

/// How a command finished, mapped onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Completed,
    Diverged,
}

impl Completion {
    pub fn exit_code(self) -> i32 {
        match self {
            Completion::Completed => 0,
            Completion::Diverged => 2,
        }
    }

    fn of(trajectory: &Trajectory) -> Self {
        if trajectory.is_completed() {
            Completion::Completed
        } else {
            Completion::Diverged
        }
    }
}

fn status_json(status: &Status) -> serde_json::Value {
    serde_json::to_value(status).expect("status serializes")
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn build(config: &ScenarioConfig, meta: &mut RunMetadata) -> Result<(BuiltModel, usize)> {
    let built = meta.time("build", || config.build())?;
    let probe = built
        .probe_dof(&config.probe)
        .with_context(|| format!("probe {:?} has no free dof", config.probe))?;
    Ok((built, probe))
}

/// The full-order trajectory, from the cache when available.
fn reference(
    config: &ScenarioConfig,
    model: &dyn StructuralModel,
    cache: Option<&ReferenceCache>,
    meta: &mut RunMetadata,
) -> Result<(Trajectory, bool)> {
    let key = reference_key(config);
    if let Some(cache) = cache {
        if let Some(trajectory) = cache.load(&key)? {
            info!("reference {key} loaded from {}", cache.dir().display());
            return Ok((trajectory, true));
        }
    }
    let run = meta.time("reference", || {
        integrate_plan(
            model,
            plan(model, Method::Full, 0, &config.build)?,
            &config.integrator,
        )
    })?;
    if let Some(cache) = cache {
        cache.store(&key, &run.trajectory)?;
    }
    Ok((run.trajectory, false))
}

fn write_plan_exports(
    dir: &Path,
    plan: &Plan,
    meta_files: &mut Vec<String>,
    prefix: &str,
) -> Result<()> {
    match &plan.reduction {
        Some(Reduction::Linear(v)) | Some(Reduction::Linearized(v)) => {
            formats::write_basis(&dir.join("basis.csv"), v)?;
            meta_files.push(format!("{prefix}basis.csv"));
        }
        Some(Reduction::Quadratic(q)) => {
            formats::write_basis(&dir.join("basis.csv"), q.v())?;
            formats::write_theta(&dir.join("theta.csv"), q.theta())?;
            meta_files.push(format!("{prefix}basis.csv"));
            meta_files.push(format!("{prefix}theta.csv"));
        }
        None => {}
    }
    if !plan.singular_values.is_empty() {
        let retained = plan.reduction.as_ref().map_or(0, |r| r.size());
        let spectrum = Spectrum {
            method: plan.method,
            modes: plan.modes,
            values: &plan.singular_values,
            retained,
        };
        formats::write_singular_values(&dir.join("singular_values.csv"), &[spectrum])?;
        meta_files.push(format!("{prefix}singular_values.csv"));
    }
    Ok(())
}

pub struct RunOptions {
    pub config: ScenarioConfig,
    pub method: Method,
    pub modes: usize,
    pub out: PathBuf,
    /// Also compare against the full-order reference.
    pub with_error: bool,
    pub cache: Option<ReferenceCache>,
}

/// Integrates one method and writes its artifacts.
pub fn cmd_run(opts: &RunOptions) -> Result<Completion> {
    let config = &opts.config;
    prepare(&opts.out)?;
    let mut meta = RunMetadata::new("run", config, 1);
    let (built, probe) = build(config, &mut meta)?;
    let model = built.as_model();

    let (trajectory, reduced_dofs, cached) = if opts.method == Method::Full {
        let (trajectory, cached) = reference(config, model, opts.cache.as_ref(), &mut meta)?;
        (trajectory, model.dofs(), cached)
    } else {
        let plan = meta.time("reduce", || {
            plan(model, opts.method, opts.modes, &config.build)
        })?;
        write_plan_exports(&opts.out, &plan, &mut meta.files, "")?;
        let run = meta.time("integrate", || {
            integrate_plan(model, plan, &config.integrator)
        })?;
        (run.trajectory, run.reduced_dofs, false)
    };
    formats::write_trajectory(&opts.out.join("trajectory.csv"), &trajectory)?;
    formats::write_probe(&opts.out.join("probe.csv"), &trajectory, probe)?;
    meta.add_file("trajectory.csv");
    meta.add_file("probe.csv");

    let mut gre = None;
    if opts.with_error && opts.method != Method::Full {
        let (reference, _) = reference(config, model, opts.cache.as_ref(), &mut meta)?;
        let entry = if reference.is_completed() {
            ErrorEntry::evaluate(
                opts.method,
                opts.modes,
                reduced_dofs,
                &trajectory,
                &reference,
                model.mass(),
            )
        } else {
            ErrorEntry {
                method: opts.method,
                modes: opts.modes,
                reduced_dofs,
                outcome: Outcome::Failed {
                    message: "reference run diverged".into(),
                },
            }
        };
        let report = ErrorReport {
            scenario: config.name.clone(),
            dt: config.integrator.dt,
            t_end: config.integrator.t_end,
            entries: vec![entry.clone()],
        };
        formats::write_error_report(&opts.out.join("error_report.csv"), &report)?;
        meta.add_file("error_report.csv");
        gre = Some(entry.outcome);
    }

    let completion = Completion::of(&trajectory);
    match &trajectory.status {
        Status::Completed => info!("{} completed with {reduced_dofs} dofs", opts.method),
        Status::Diverged { time, reason } => {
            warn!("{} diverged at t = {time:.6} s: {reason}", opts.method)
        }
    }
    meta.summary = json!({
        "method": opts.method,
        "modes": opts.modes,
        "reduced_dofs": reduced_dofs,
        "status": status_json(&trajectory.status),
        "newton_iterations": trajectory.iterations.iter().sum::<usize>(),
        "diagnostics": trajectory.diagnostics,
        "reference_from_cache": cached,
        "error": gre,
    });
    meta.write(&opts.out)?;
    Ok(completion)
}

pub struct CompareOptions {
    pub config: ScenarioConfig,
    pub methods: Vec<Method>,
    pub modes: Vec<usize>,
    pub out: PathBuf,
    pub cache: Option<ReferenceCache>,
    pub threads: usize,
}

struct Job {
    method: Method,
    modes: usize,
}

impl Job {
    fn dir(&self) -> String {
        format!(
            "runs/{}_n{}",
            self.method.name().to_ascii_lowercase(),
            self.modes
        )
    }
}

struct JobResult {
    entry: ErrorEntry,
    singular_values: Vec<f64>,
    retained: usize,
    seconds: f64,
    files: Vec<String>,
    coupling: Option<f64>,
}

fn failed(job: &Job, reduced_dofs: usize, message: String) -> ErrorEntry {
    ErrorEntry {
        method: job.method,
        modes: job.modes,
        reduced_dofs,
        outcome: Outcome::Failed { message },
    }
}

fn run_job(
    job: &Job,
    config: &ScenarioConfig,
    built: &BuiltModel,
    probe: usize,
    reference: &Trajectory,
    out: &Path,
) -> Result<JobResult> {
    let start = Instant::now();
    let model = built.as_model();
    let rel = job.dir();
    let dir = out.join(&rel);
    prepare(&dir)?;
    let mut files = Vec::new();
    let plan = match plan(model, job.method, job.modes, &config.build) {
        Ok(p) => p,
        Err(e) => {
            warn!("{} with {} modes: {e}", job.method, job.modes);
            return Ok(JobResult {
                entry: failed(job, 0, e.to_string()),
                singular_values: Vec::new(),
                retained: 0,
                seconds: start.elapsed().as_secs_f64(),
                files,
                coupling: None,
            });
        }
    };
    let singular_values = plan.singular_values.clone();
    let retained = plan.reduced_dofs(model);
    let run = match integrate_plan(model, plan, &config.integrator) {
        Ok(r) => r,
        Err(e) => {
            return Ok(JobResult {
                entry: failed(job, retained, e.to_string()),
                singular_values,
                retained,
                seconds: start.elapsed().as_secs_f64(),
                files,
                coupling: None,
            })
        }
    };
    formats::write_trajectory(&dir.join("trajectory.csv"), &run.trajectory)?;
    formats::write_probe(&dir.join("probe.csv"), &run.trajectory, probe)?;
    files.push(format!("{rel}/trajectory.csv"));
    files.push(format!("{rel}/probe.csv"));
    let entry = ErrorEntry::evaluate(
        job.method,
        job.modes,
        run.reduced_dofs,
        &run.trajectory,
        reference,
        model.mass(),
    );

    let mut coupling = None;
    if job.method == Method::LbSmd && run.trajectory.is_completed() {
        let modes = vibration_modes(model, job.modes)?;
        let theta = static_modal_derivatives(model, &modes, &config.build.fd)?;
        match reconstruct_amplitudes(
            &run.trajectory.displacements,
            &modes.v,
            &theta,
            model.mass(),
        ) {
            Ok(amplitudes) => {
                let report = coupling_report(&amplitudes);
                formats::write_coupling(&dir.join("coupling.csv"), &report)?;
                formats::write_coupling_series(
                    &dir.join("coupling_series.csv"),
                    &run.trajectory.times,
                    &amplitudes,
                )?;
                files.push(format!("{rel}/coupling.csv"));
                files.push(format!("{rel}/coupling_series.csv"));
                coupling = Some(report.score);
            }
            Err(e) => warn!("coupling diagnostic for {} modes: {e}", job.modes),
        }
    }
    info!(
        "{} n={} finished in {:.1} s",
        job.method,
        job.modes,
        start.elapsed().as_secs_f64()
    );
    Ok(JobResult {
        entry,
        singular_values,
        retained,
        seconds: start.elapsed().as_secs_f64(),
        files,
        coupling,
    })
}

/// Runs the reference once and every `(method, modes)` pair in parallel.
pub fn cmd_compare(opts: &CompareOptions) -> Result<Completion> {
    let config = &opts.config;
    prepare(&opts.out)?;
    let mut meta = RunMetadata::new("compare", config, opts.threads);
    let (built, probe) = build(config, &mut meta)?;
    let model = built.as_model();
    let (reference, cached) = reference(config, model, opts.cache.as_ref(), &mut meta)?;
    prepare(&opts.out.join("reference"))?;
    formats::write_probe(&opts.out.join("reference/probe.csv"), &reference, probe)?;
    meta.add_file("reference/probe.csv");
    if !reference.is_completed() {
        warn!("reference run diverged; no error report is possible");
        meta.summary = json!({ "reference": status_json(&reference.status) });
        meta.write(&opts.out)?;
        return Ok(Completion::Diverged);
    }

    let mut jobs = Vec::new();
    for &method in &opts.methods {
        match method {
            Method::Full => {
                warn!("the full model is the reference and is not compared with itself")
            }
            Method::Linearized => jobs.push(Job { method, modes: 0 }),
            _ => jobs.extend(opts.modes.iter().map(|&modes| Job { method, modes })),
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()?;
    let start = Instant::now();
    let results: Vec<Result<JobResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(job, config, &built, probe, &reference, &opts.out))
            .collect()
    });
    meta.timings.push(crate::metadata::Timing {
        label: "reduced runs".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let report = ErrorReport {
        scenario: config.name.clone(),
        dt: config.integrator.dt,
        t_end: config.integrator.t_end,
        entries: results.iter().map(|r| r.entry.clone()).collect(),
    };
    formats::write_error_report(&opts.out.join("error_report.csv"), &report)?;
    fs::write(
        opts.out.join("error_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    fs::write(opts.out.join("plot_errors.py"), formats::PLOT_SCRIPT)?;
    meta.add_file("error_report.csv");
    meta.add_file("error_report.json");
    meta.add_file("plot_errors.py");
    let spectra: Vec<Spectrum<'_>> = results
        .iter()
        .filter(|r| !r.singular_values.is_empty())
        .map(|r| Spectrum {
            method: r.entry.method,
            modes: r.entry.modes,
            values: &r.singular_values,
            retained: r.retained,
        })
        .collect();
    if !spectra.is_empty() {
        formats::write_singular_values(&opts.out.join("singular_values.csv"), &spectra)?;
        meta.add_file("singular_values.csv");
    }
    for r in &results {
        meta.files.extend(r.files.iter().cloned());
    }
    meta.summary = json!({
        "reference_from_cache": cached,
        "reference_dofs": model.dofs(),
        "runs": results.iter().map(|r| json!({
            "method": r.entry.method,
            "modes": r.entry.modes,
            "reduced_dofs": r.entry.reduced_dofs,
            "outcome": r.entry.outcome,
            "seconds": r.seconds,
            "coupling_score": r.coupling,
        })).collect::<Vec<_>>(),
    });
    meta.write(&opts.out)?;
    Ok(Completion::Completed)
}

pub struct ModesOptions {
    pub config: ScenarioConfig,
    pub count: usize,
    pub out: Option<PathBuf>,
}

/// Lowest eigenfrequencies in Hz, optionally with mode shapes written to disk.
pub fn cmd_modes(opts: &ModesOptions) -> Result<Vec<f64>> {
    let config = &opts.config;
    let mut meta = RunMetadata::new("modes", config, 1);
    let built = meta.time("build", || config.build())?;
    let model = built.as_model();
    let pairs = meta.time("eigensolve", || {
        eig_gsym(model.linear_stiffness(), model.mass(), opts.count)
    })?;
    let frequencies = pairs.frequencies_hz();
    if let Some(out) = &opts.out {
        prepare(out)?;
        formats::write_frequencies(&out.join("frequencies.csv"), &pairs.eigenvalues)?;
        formats::write_mode_shapes(&out.join("mode_shapes.csv"), &built, &pairs.vectors)?;
        meta.add_file("frequencies.csv");
        meta.add_file("mode_shapes.csv");
        meta.summary = json!({ "frequencies_hz": frequencies });
        meta.write(out)?;
    }
    Ok(frequencies)
}
