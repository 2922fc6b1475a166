//! Batch front end for `bsrm`: `simulate`, `verify`, `bench` and `decompose`
//! driven by TOML run configs.
//!
//! Exit codes: 0 success, 1 tolerance failure, 2 config or validation error,
//! 3 runtime error.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod bench;
pub mod config;
pub mod decompose;
pub mod ensemble;
pub mod simulate;
pub mod verify;

pub use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Library errors raised while building the model are input problems;
/// the rest happen at run time.
impl From<bsrm::Error> for CliError {
    fn from(e: bsrm::Error) -> Self {
        use bsrm::Error as E;
        match e {
            E::Io(_) | E::Format(_) | E::CostGuard { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub fn io_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "bsrm",
    version,
    about = "Third-order spectral representation field simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set grid.n=[32,32]`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads for sample generation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Write sample fields and a manifest.
    Simulate,
    /// Compare ensemble moments against targets.
    Verify,
    /// Time naive and FFT synthesis over a sample-count sweep.
    Bench,
    /// Dump pure spectra and coupling counts.
    Decompose,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    ToleranceFailure,
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: usize,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config = RunConfig::load(path, &cli.set)?;
    let ctx = Context {
        out: config.out_dir(cli.out.as_deref()),
        workers: cli.workers.unwrap_or_else(default_workers).max(1),
        config,
    };
    match cli.command {
        Command::Simulate => simulate::run(&ctx).map(|_| Outcome::Pass),
        Command::Verify => verify::run(&ctx).map(|r| r.outcome()),
        Command::Bench => bench::run(&ctx).map(|_| Outcome::Pass),
        Command::Decompose => decompose::run(&ctx).map(|r| r.outcome()),
    }
}

/// Run the CLI and return the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::ToleranceFailure) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
