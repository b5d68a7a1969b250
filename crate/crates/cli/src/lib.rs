//! Command-line front end: `pqspectra solve|sweep|thresholds --config <path>`.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 a solver ran
//! but did not produce a converged nontrivial solution.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_solve, cmd_sweep, cmd_thresholds, Outcome};
pub use config::RunConfig;

pub const OUT_ENV: &str = "PQSPECTRA_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pqspectra_core::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "pqspectra", version, about = "Eigenvalue solvers for the (p(x), q(x))-Laplacian with Robin or Neumann data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at one lambda with the solver for the configured case.
    Solve(CommonArgs),
    /// Sweep lambda over the configured grid (homogeneous cases).
    Sweep(CommonArgs),
    /// Report explicit thresholds: C*, rho, Lambda, sigma, or mountain geometry.
    Thresholds(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run configuration (flat dotted TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to $PQSPECTRA_OUT, then `output.dir`, then `.`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads for restarts and sweeps (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides `solver.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `solver.tol`.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl CommonArgs {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(&self.config)?.with_overrides(self.seed, self.tol)
    }

    pub fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Runs one command and returns the process exit code, printing a one-line summary or error.
pub fn run(cli: Cli) -> i32 {
    let (args, f): (&CommonArgs, fn(&RunConfig, &std::path::Path) -> Result<Outcome, CliError>) = match &cli.command {
        Command::Solve(a) => (a, cmd_solve),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Thresholds(a) => (a, cmd_thresholds),
    };
    let result = args.load().and_then(|cfg| {
        let out = args.out_dir(&cfg);
        pqspectra_core::par::with_jobs(args.jobs, || f(&cfg, &out))
    });
    match result {
        Ok(o) => {
            println!("{}", o.message);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
