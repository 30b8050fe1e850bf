//! `mr-robust`: weak-instrument-robust Mendelian randomization from the
//! command line.

use std::process::ExitCode;

use clap::Parser;
use mr_robust_cli::analyze::{run_analyze, AnalyzeArgs};
use mr_robust_cli::simulate::{run_simulate, SimulateArgs};
use mr_robust_cli::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mr-robust",
    version,
    about = "Weak-instrument-robust tests, confidence regions and diagnostics \
             for two-sample summary-data Mendelian randomization"
)]
struct Cli {
    /// Worker threads for Monte Carlo experiments (default: all cores;
    /// also settable via MR_ROBUST_THREADS).
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Run the robust-test battery on a summary-statistics CSV.
    Analyze(AnalyzeArgs),
    /// Run a seeded Monte Carlo experiment from a TOML description.
    Simulate(SimulateArgs),
}

fn main() -> ExitCode {
    // Surface library warnings (e.g. aggregated inversion-failure notices)
    // unless the user configures otherwise.
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("error[usage]: {e}");
            return ExitCode::from(1);
        }
    };

    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error[{}]: {e}", e.code());
        return ExitCode::from(e.exit_code());
    }

    let outcome = match &cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match outcome {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Applies `--threads`, falling back to `MR_ROBUST_THREADS`.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MR_ROBUST_THREADS") {
            Ok(text) => Some(text.parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "MR_ROBUST_THREADS must be a positive integer, got {text:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(CliError::Usage(
                "thread count must be at least 1".to_string(),
            ));
        }
        // Ignore the error from a second initialization (tests may share a
        // process); the first setting wins, which is fine for a CLI run.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
