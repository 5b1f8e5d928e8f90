//! `qinfo`: config-driven quantum-information diagnostics and estimation
//! experiments.
//!
//! Every subcommand reads a JSON experiment configuration, runs the
//! requested computation, and writes a CSV report plus a JSON summary.
//! Exit codes: 0 success, 2 configuration error, 3 numerical or I/O
//! failure. Runs with a fixed seed are byte-identical up to the
//! `wall_time_ms` metadata field.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{CommandKind, ExperimentConfig};

#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit 2).
    Config(String),
    /// Numerical failure or I/O failure during execution (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn numeric(err: qinfo_core::Error) -> Self {
        CliError::Numeric(err.to_string())
    }

    pub fn numeric_msg(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn io(err: std::io::Error) -> Self {
        CliError::Numeric(err.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qinfo",
    version,
    about = "Quantum Fisher information diagnostics and adaptive estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum information over a parameter grid
    Qfi(RunArgs),
    /// Classical Fisher information of a measurement
    Fisher(RunArgs),
    /// The information inequality chain, step by step
    Chain(RunArgs),
    /// Pointwise equality conditions and grid-wide attainability
    Attain(RunArgs),
    /// Great-circle classification of a Bloch curve
    Classify(RunArgs),
    /// Seeded Monte Carlo run of an adaptive estimation strategy
    Simulate(RunArgs),
    /// Simulate across a grid of true parameter values
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report files (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the plan's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to QINFO_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Qfi(_) => CommandKind::Qfi,
            Command::Fisher(_) => CommandKind::Fisher,
            Command::Chain(_) => CommandKind::Chain,
            Command::Attain(_) => CommandKind::Attain,
            Command::Classify(_) => CommandKind::Classify,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Sweep(_) => CommandKind::Sweep,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Qfi(a)
            | Command::Fisher(a)
            | Command::Chain(a)
            | Command::Attain(a)
            | Command::Classify(a)
            | Command::Simulate(a)
            | Command::Sweep(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command.kind(), cli.command.args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qinfo: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn configure_threads(args: &RunArgs) -> Result<(), CliError> {
    let threads = match args.threads {
        Some(t) => Some(t),
        None => match std::env::var("QINFO_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::config(format!("QINFO_THREADS must be a positive integer, got '{v}'"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::config("thread count must be at least 1"));
        }
        // Results do not depend on the pool size; ignore double init.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn run_command(kind: CommandKind, args: &RunArgs) -> Result<(), CliError> {
    configure_threads(args)?;
    let config = ExperimentConfig::load(&args.config, kind, args.seed)?;
    let config_dir = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));

    let started = Instant::now();
    let output = run::execute(&config, &config_dir)?;

    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(CliError::io)?;
    let csv_name = config
        .output
        .as_ref()
        .and_then(|o| o.csv.clone())
        .unwrap_or_else(|| format!("{}.csv", kind.name()));
    let json_name = config
        .output
        .as_ref()
        .and_then(|o| o.json.clone())
        .unwrap_or_else(|| format!("{}.json", kind.name()));

    output.table.write_csv(&out_dir.join(&csv_name))?;

    let summary = report::RunSummary {
        command: kind.name().to_string(),
        config_sha256: hex::encode(Sha256::digest(config.canonical_json().as_bytes())),
        seed: output.seed,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: started.elapsed().as_millis() as u64,
        rows: output.table.rows.len(),
        csv_path: csv_name,
        details: output.details,
    };
    summary.write_json(&out_dir.join(&json_name))?;
    Ok(())
}
