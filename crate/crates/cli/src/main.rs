use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quadsgd::commands::{self, Stub};
use quadsgd::{CliConfigFile, CliError};
use quadsgd_core::ModelKind;

#[derive(Parser)]
#[command(
    name = "quadsgd",
    version,
    about = "SGD scaling-law experiments on quadratically parameterized regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print predicted rate exponents and, with --budget, the compute-optimal (M, T).
    Rates {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Run a sweep; writes the CSV at `output` and `<output>.summary.json`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a log-log slope to a sweep CSV; prints JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
    },
    /// Phase I / Phase II box coverage; prints JSON.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Replace trained trajectories with a constant stub.
        #[arg(long, value_enum)]
        stub: Option<Stub>,
    },
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse()
        .map_err(|_| format!("unknown model kind {s:?} (quadratic|linear)"))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rates {
            alpha,
            beta,
            budget,
        } => {
            print!("{}", commands::cmd_rates(alpha, beta, budget)?.render());
        }
        Command::Sweep {
            config,
            threads,
            seed,
        } => {
            let cfg = CliConfigFile::load(&config)?;
            let out = commands::cmd_sweep(&cfg, threads, seed)?;
            eprintln!(
                "wrote {} records to {} and summary to {}",
                out.records.len(),
                cfg.output.display(),
                cfg.summary_path().display()
            );
        }
        Command::Fit { input, model } => {
            println!("{}", to_json(&commands::cmd_fit(&input, model)?));
        }
        Command::Diagnose {
            config,
            threads,
            seed,
            stub,
        } => {
            let cfg = CliConfigFile::load(&config)?;
            println!(
                "{}",
                to_json(&commands::cmd_diagnose(&cfg, threads, seed, stub)?)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
