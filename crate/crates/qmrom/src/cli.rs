//! Command-line definitions and dispatch.
//!
//! Exit codes: `0` completed, `2` a run diverged (artifacts are still written),
//! `1` configuration, usage or I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qmrom_core::methods::{parse_method_list, Method};
use qmrom_core::scenarios::{builtin_scenarios, ScenarioConfig};

use crate::cache::ReferenceCache;
use crate::commands::{cmd_compare, cmd_modes, cmd_run, CompareOptions, ModesOptions, RunOptions};
use crate::config::{parse_probe, resolve, to_toml};

/// Caps the number of worker threads of `compare`.
pub const THREADS_ENV: &str = "QMROM_THREADS";
/// Default location of the reference cache.
pub const CACHE_ENV: &str = "QMROM_CACHE";

#[derive(Debug, Parser)]
#[command(
    name = "qmrom",
    version,
    about = "Quadratic-manifold and linear-basis reduced-order models of nonlinear structures"
)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario with one method.
    Run(RunArgs),
    /// Sweep methods and mode counts against the full-order reference.
    Compare(CompareArgs),
    /// Lowest eigenfrequencies and mode shapes of the linearized structure.
    Modes(ModesArgs),
    /// List the built-in scenarios, or print one as TOML.
    Scenarios(ScenariosArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Scenario file (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    pub scenario: Option<String>,
}

impl Source {
    fn resolve(&self) -> Result<ScenarioConfig> {
        resolve(self.scenario.as_deref(), self.config.as_deref())
    }
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    /// Directory of cached reference trajectories.
    #[arg(long, env = CACHE_ENV, default_value = ".qmrom-cache")]
    pub cache: PathBuf,
    /// Always recompute the reference.
    #[arg(long)]
    pub no_cache: bool,
}

impl CacheArgs {
    fn store(&self) -> Option<ReferenceCache> {
        (!self.no_cache).then(|| ReferenceCache::new(&self.cache))
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    /// Method name, e.g. full, linearized, QM-SMD, LB-KrySD-SMD.
    #[arg(long)]
    pub method: Method,
    /// Number of modes or Krylov vectors.
    #[arg(long, default_value_t = 10)]
    pub modes: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Probe point as "x,y,component".
    #[arg(long)]
    pub probe: Option<String>,
    /// Also compute GRE_M against the full-order reference.
    #[arg(long)]
    pub error: bool,
    #[command(flatten)]
    pub cache: CacheArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: Source,
    /// Comma-separated method names, or "all"; defaults to the scenario's list.
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated mode counts; defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub cache: CacheArgs,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub source: Source,
    /// Number of modes.
    #[arg(short = 'n', long = "count", default_value_t = 3)]
    pub count: usize,
    /// Directory for frequencies.csv and mode_shapes.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Print this scenario as TOML instead of listing names.
    pub name: Option<String>,
}

/// Worker threads from `QMROM_THREADS`, else the available parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be at least 1");
            }
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let mut config = args.source.resolve()?;
            if let Some(p) = &args.probe {
                config.probe = parse_probe(p)?;
            }
            if args.method.is_reduced() && args.modes == 0 {
                bail!("--modes must be at least 1");
            }
            let opts = RunOptions {
                config,
                method: args.method,
                modes: args.modes,
                out: args.out,
                with_error: args.error,
                cache: args.cache.store(),
            };
            Ok(cmd_run(&opts)?.exit_code())
        }
        Command::Compare(args) => {
            let config = args.source.resolve()?;
            let methods = match &args.methods {
                Some(list) => parse_method_list(list)?,
                None => config.methods.clone(),
            };
            let modes = args.modes.unwrap_or_else(|| config.mode_counts.clone());
            if modes.is_empty() || modes.contains(&0) {
                bail!("mode counts must be positive");
            }
            let opts = CompareOptions {
                config,
                methods,
                modes,
                out: args.out,
                cache: args.cache.store(),
                threads: thread_count()?,
            };
            Ok(cmd_compare(&opts)?.exit_code())
        }
        Command::Modes(args) => {
            let config = args.source.resolve()?;
            let frequencies = cmd_modes(&ModesOptions {
                config,
                count: args.count,
                out: args.out,
            })?;
            println!("mode  frequency_hz");
            for (k, f) in frequencies.iter().enumerate() {
                println!("{:>4}  {f:.3}", k + 1);
            }
            Ok(0)
        }
        Command::Scenarios(args) => {
            match args.name {
                Some(name) => print!("{}", to_toml(&resolve(Some(&name), None)?)?),
                None => {
                    for s in builtin_scenarios() {
                        println!("{}", s.name);
                    }
                }
            }
            Ok(0)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn source_is_exclusive_and_required() {
        assert!(Cli::try_parse_from(["qmrom", "modes"]).is_err());
        assert!(
            Cli::try_parse_from(["qmrom", "modes", "--scenario", "a", "--config", "b"]).is_err()
        );
        assert!(Cli::try_parse_from(["qmrom", "modes", "--scenario", "beam_cc"]).is_ok());
    }

    #[test]
    fn method_and_mode_lists_parse() {
        let cli = Cli::try_parse_from([
            "qmrom",
            "compare",
            "--scenario",
            "s",
            "--methods",
            "all",
            "--modes",
            "5,10",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Compare(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.modes, Some(vec![5, 10]));
        assert!(Cli::try_parse_from([
            "qmrom",
            "run",
            "--scenario",
            "s",
            "--method",
            "QM-XYZ",
            "--out",
            "o"
        ])
        .is_err());
        let cli = Cli::try_parse_from([
            "qmrom",
            "run",
            "--scenario",
            "s",
            "--method",
            "qm-smd",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.method, Method::QmSmd);
    }
}
