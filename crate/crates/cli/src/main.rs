//! `plap`: command-line front end for the p-Laplace finite-difference lab.

mod commands;
mod config;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "Finite-difference lab for parabolic p-Laplace families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config's output.dir; default ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel work (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write its snapshots and run statistics.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a perturbation sweep and write the gap table and rate fit.
    RateSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate residuals of a closed-form solution at sampled points.
    VerifyExact(commands::VerifyArgs),
    /// Print predicted convergence exponents.
    RateTable(commands::TableArgs),
    /// Certify square-root closeness of a perturbed operator family.
    CheckC1 {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 2).
    Config(String),
    /// The numerics failed (exit 1).
    Numerical(String),
    /// Results could not be written (exit 1).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<plap_core::Error> for CliError {
    fn from(e: plap_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Clone)]
pub struct Globals {
    pub out: Option<PathBuf>,
    pub seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let globals = Globals {
        out: cli.out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Solve { config } => commands::solve(&config, &globals),
        Command::RateSweep { config } => commands::rate_sweep(&config, &globals),
        Command::VerifyExact(args) => commands::verify_exact(&args, &globals),
        Command::RateTable(args) => commands::rate_table(&args, &globals),
        Command::CheckC1 { config } => commands::check_c1(&config, &globals),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLAP_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
