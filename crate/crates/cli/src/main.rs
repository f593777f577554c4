//! Command-line front end: simulate, ensemble, verify and oracle runs, each
//! writing one output directory with a config snapshot and a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{OracleKind, Outcome, VerifyArgs};
use config::{EnsembleSection, Functional, RunConfig};
use output::RunDir;

/// Forces a single worker thread when set to anything but `0` or empty.
const SINGLE_THREAD_ENV: &str = "BURGERS3D_SINGLE_THREAD";

const EXIT_FAILURE: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Bad flags, config or parameter combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "burgers3d", version, about = "Stochastic 3D Burgers solver and verification toolkit")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise seed (simulate, oracle) or base seed (ensemble).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for this run.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverFlags {
    /// Spectral truncation N.
    #[arg(long)]
    n: Option<usize>,
    /// Final time T.
    #[arg(long)]
    horizon: Option<f64>,
    /// Solver time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Viscosity.
    #[arg(long)]
    nu: Option<f64>,
    /// Noise intensity (variance rate of W).
    #[arg(long)]
    b: Option<f64>,
    /// Record diagnostics every this many steps.
    #[arg(long)]
    record_every: Option<usize>,
    /// Abort level for the H1 seminorm of v.
    #[arg(long)]
    blowup_threshold: Option<f64>,
    /// Drop the convective term.
    #[arg(long)]
    linear: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one path and write the trajectory CSVs and the driving path.
    Simulate {
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Monte Carlo moment estimates against their bounds, as NDJSON.
    Ensemble {
        #[command(flatten)]
        solver: SolverFlags,
        /// Number of Monte Carlo paths.
        #[arg(long)]
        n_paths: Option<usize>,
        /// Comma-separated subset of functionals.
        #[arg(long, value_enum, value_delimiter = ',')]
        functionals: Vec<Functional>,
        /// Also write a flat CSV of the estimates.
        #[arg(long)]
        csv: bool,
    },
    /// Check trajectory CSVs against the pathwise inequalities.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// L1 norm of the initial data; read from the CSV metadata if absent.
        #[arg(long)]
        u0_l1: Option<f64>,
        /// Start of the energy-inequality window.
        #[arg(long)]
        eps_time: Option<f64>,
        /// Relative tolerance of the exact-constant checks.
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Allowed relative excess of |v|_inf over its initial value.
        #[arg(long)]
        max_principle_slack: Option<f64>,
    },
    /// Compare the solver with an exact or reference solution.
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Ensemble { .. } => "ensemble",
            Command::Verify { .. } => "verify",
            Command::Oracle { .. } => "oracle",
        }
    }
}

fn apply(flags: &SolverFlags, cfg: &mut RunConfig) -> Result<(), UsageError> {
    let s = &mut cfg.solver;
    if let Some(n) = flags.n {
        s.grid = burgers3d::spectral::GridSpec::new(n, s.grid.dealias()).map_err(|e| UsageError(e.to_string()))?;
    }
    if let Some(t) = flags.horizon {
        s.horizon = t;
    }
    if let Some(dt) = flags.dt {
        s.dt = dt;
    }
    if let Some(nu) = flags.nu {
        s.nu = nu;
    }
    if let Some(b) = flags.b {
        s.noise.b = b;
    }
    if let Some(r) = flags.record_every {
        s.record_every = r;
    }
    if let Some(x) = flags.blowup_threshold {
        s.blowup_threshold = x;
    }
    if flags.linear {
        s.nonlinear = false;
    }
    Ok(())
}

fn thread_count(requested: Option<usize>) -> usize {
    let forced = std::env::var(SINGLE_THREAD_ENV).is_ok_and(|v| !v.is_empty() && v != "0");
    if forced {
        1
    } else {
        requested.unwrap_or(0)
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let command = cli.command.name();
    match &cli.command {
        Command::Simulate { solver } | Command::Oracle { solver, .. } => apply(solver, &mut cfg)?,
        Command::Ensemble { solver, n_paths, .. } => {
            apply(solver, &mut cfg)?;
            if let Some(n) = n_paths {
                cfg.ensemble.get_or_insert_with(|| EnsembleSection::new(*n)).n_paths = *n;
            }
        }
        Command::Verify { rel_tol, max_principle_slack, .. } => {
            if let Some(x) = rel_tol {
                cfg.tolerance.rel_tol = *x;
            }
            if let Some(x) = max_principle_slack {
                cfg.tolerance.max_principle_slack = *x;
            }
        }
    }
    if let Some(seed) = cli.seed {
        cfg.solver.noise.seed = seed;
        if let Some(e) = &mut cfg.ensemble {
            e.base_seed = seed;
        }
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;

    let threads = thread_count(cli.threads);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    let threads = rayon::current_num_threads();

    let root = cfg.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(command));
    let mut dir = RunDir::create(&root)?;
    dir.write("config.toml", &cfg.render())?;
    let (outcome, summary) = match cli.command {
        Command::Simulate { .. } => commands::simulate(&cfg, &mut dir)?,
        Command::Ensemble { functionals, csv, .. } => {
            let chosen = if functionals.is_empty() {
                cfg.ensemble.as_ref().map(|e| e.functionals.clone()).unwrap_or_default()
            } else {
                functionals
            };
            commands::ensemble(&cfg, &chosen, csv, &mut dir)?
        }
        Command::Verify { files, checks, u0_l1, eps_time, .. } => {
            let args = VerifyArgs { files, checks, u0_l1, eps_time };
            commands::verify(&args, &cfg.tolerance, &mut dir)?
        }
        Command::Oracle { kind, .. } => commands::oracle(kind, &cfg, &mut dir)?,
    };
    eprintln!("{command}: {summary} -> {}", dir.path().display());
    dir.finish(command, threads, summary)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(EXIT_FAILURE),
        Ok(Outcome::Blowup) => ExitCode::from(EXIT_BLOWUP),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}
