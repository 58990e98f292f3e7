use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reinsure::cli;
use reinsure::config::RunConfig;
use reinsure::error::{Error, Result};

/// Optimal incentive-compatible reinsurance under distortion premiums.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run both solver routes, cross-check them and certify the result.
    #[arg(long, global = true)]
    paranoid: bool,
    /// Seed for simulation and random verification directions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a* and the optimal contract.
    Solve,
    /// Check the optimality conditions for a contract.
    Verify {
        #[arg(long)]
        contract: PathBuf,
    },
    /// Monte Carlo ruin probability under a contract (default: the optimum).
    Simulate {
        #[arg(long)]
        contract: Option<PathBuf>,
    },
    /// Premium of a contract by both pricing routes.
    Price {
        #[arg(long)]
        contract: PathBuf,
    },
    /// Rerun a closed-form example.
    Reproduce { case: Case },
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Layer,
    Stoploss,
}

fn print(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    // a closed pipe (e.g. `| head`) is not a failure of the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn load(args: &Args) -> Result<RunConfig> {
    let path = args.config.as_deref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = args.seed {
        cfg.simulate.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(args: &Args, cfg: Option<&RunConfig>) -> PathBuf {
    args.out.clone().or_else(|| cfg.map(|c| c.output.dir.clone())).unwrap_or_else(|| Path::new("out").to_path_buf())
}

/// Returns whether the run succeeded in the sense of its command.
fn run(args: &Args) -> Result<bool> {
    match &args.command {
        Command::Solve => {
            let cfg = load(args)?;
            print(&cli::run_solve(&cfg, &out_dir(args, Some(&cfg)), args.paranoid)?)?;
        }
        Command::Verify { contract } => {
            let cfg = load(args)?;
            let summary = cli::run_verify(&cfg, contract, &out_dir(args, Some(&cfg)))?;
            print(&summary)?;
            return Ok(summary.passed);
        }
        Command::Simulate { contract } => {
            let cfg = load(args)?;
            print(&cli::run_simulate(&cfg, contract.as_deref(), &out_dir(args, Some(&cfg)))?)?;
        }
        Command::Price { contract } => {
            let cfg = load(args)?;
            print(&cli::run_price(&cfg, contract)?)?;
        }
        Command::Reproduce { case: Case::Layer } => print(&cli::reproduce_layer(&out_dir(args, None))?)?,
        Command::Reproduce { case: Case::Stoploss } => print(&cli::reproduce_stoploss(&out_dir(args, None))?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    // usage errors share the config exit code rather than clap's 2, which
    // is reserved for assumption failures
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(5) } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
