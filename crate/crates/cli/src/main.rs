//! `nctorus`: evaluation, export and verification front end.

mod commands;
mod config;
mod json;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig, TauArgs, ThetaArgs};

#[derive(Parser)]
#[command(name = "nctorus", version, about = "Landau levels on the torus at rational flux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a level-K theta function with its truncation certificate.
    Theta(ThetaArgs),
    /// Evaluate the Dedekind eta function.
    Eta(TauArgs),
    /// Export the lowest-Landau-level basis on a grid and its eigenphase table.
    Lll(CommonArgs),
    /// Dump the clock/shift matrices and their duals.
    Matrices(CommonArgs),
    /// Compute the partition candidate and its modular invariance residuals.
    Partition(CommonArgs),
    /// Convert a modulus to squeeze parameters and back.
    Squeeze(TauArgs),
    /// Run the full check battery.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "inject-fault", hide = true)]
        inject_fault: Option<verify::Fault>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(nctorus_core::Error),
    Failed,
}

impl From<nctorus_core::Error> for CliError {
    fn from(e: nctorus_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NCTORUS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("NCTORUS_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Theta(a) => commands::theta(a),
        Command::Eta(a) => commands::eta(a),
        Command::Squeeze(a) => commands::squeeze(a),
        Command::Lll(a) => commands::lll(&RunConfig::try_from(a)?),
        Command::Matrices(a) => commands::matrices(&RunConfig::try_from(a)?),
        Command::Partition(a) => commands::partition(&RunConfig::try_from(a)?),
        Command::Verify { common, inject_fault } => {
            let cfg = RunConfig::try_from(common)?;
            let report = verify::run(&cfg, *inject_fault);
            commands::emit(&report, cfg.output_dir.as_deref(), "verify.json")?;
            if report.passed {
                Ok(())
            } else {
                for name in &report.failed {
                    eprintln!("check failed: {name}");
                }
                Err(CliError::Failed)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}
