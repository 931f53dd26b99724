use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jdsv_cli::{list, resolve, run_scenario, write_theory, CliError};

/// Monte Carlo experiments for the short-time implied volatility of
/// jump-diffusion models with stochastic volatility.
///
/// The number of worker threads is read from `JDSV_WORKERS` (default: all cores).
#[derive(Parser)]
#[command(name = "jdsv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (bundled name or TOML file) and write its CSV.
    Run {
        scenario: String,
        /// Override the number of simulated paths.
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List the bundled scenarios, optionally filtered by a substring.
    List { filter: Option<String> },
    /// Print the theoretical short-time limits for a scenario as CSV.
    Theory { scenario: String },
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var("JDSV_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| {
        CliError::Config(format!(
            "invalid JDSV_WORKERS `{v}`: expected a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("JDSV_WORKERS: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_workers()?;
    match cli.command {
        Command::Run {
            scenario,
            paths,
            seed,
            out,
        } => {
            let mut s = resolve(&scenario)?;
            if let Some(n) = paths {
                s.model.n_paths = n;
            }
            if let Some(seed) = seed {
                s.model.seed = seed;
            }
            run_scenario(&s, &out, std::io::stdout().lock())?;
        }
        Command::List { filter } => {
            for s in list(filter.as_deref()) {
                println!("{}\t{}\t{}", s.name, s.anchor, s.description);
            }
        }
        Command::Theory { scenario } => {
            write_theory(&resolve(&scenario)?, std::io::stdout().lock())?
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jdsv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
