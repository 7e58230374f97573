use clap::{Parser, Subcommand};
use curveflux_core::commands::{cmd_profile, cmd_sweep_fig8, cmd_validate, CommandOutput};
use curveflux_core::config::{parse_config, ExperimentConfig, SCHEMA};
use curveflux_core::par::{with_threads, Exec};
use curveflux_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const ENV_THREADS: &str = "CURVEFLUX_THREADS";

/// Effective diffusion coefficients for channels over plane curves.
#[derive(Parser)]
#[command(name = "curveflux", version, after_long_help = long_help())]
struct Cli {
    /// Evaluate every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the requested estimators along the channel (`u,sigma,<methods>`).
    Profile { config: PathBuf },
    /// Compare estimators with the two-dimensional steady solution
    /// (`method,max_rel_err,mean_rel_err,flux_rel_err,nu,nv`).
    Validate { config: PathBuf },
    /// Sweep the two-line example over wall slopes (`k,m1,m2,D`).
    #[command(name = "sweep-fig8")]
    SweepFig8 { config: PathBuf },
}

fn long_help() -> String {
    format!(
        "{SCHEMA}\nENVIRONMENT\n  {ENV_THREADS}   maximum worker threads (default: all cores)\n\n\
         EXIT STATUS\n  0 success, 1 configuration error, 2 numerical or validity error\n"
    )
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var(ENV_THREADS) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!("{ENV_THREADS} must be a positive integer, got `{s}`"))),
        },
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(Failure::from)
}

type Runner = fn(&ExperimentConfig, Exec) -> curveflux_core::Result<CommandOutput>;

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let threads = threads()?;
    let (path, command): (&Path, Runner) = match &cli.command {
        Command::Profile { config } => (config, cmd_profile),
        Command::Validate { config } => (config, cmd_validate),
        Command::SweepFig8 { config } => (config, cmd_sweep_fig8),
    };
    let cfg = load(path)?;
    let out = with_threads(threads, || command(&cfg, exec))?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    out.write()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            for line in m.lines() {
                eprintln!("config error: {line}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
