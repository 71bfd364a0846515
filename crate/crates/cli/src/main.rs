//! `unravel`: simulate, verify and inspect diffusive unravellings.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage, parse or
//! runtime error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "unravel", version, about = "Diffusive unravellings of Lindblad master equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate an ensemble and compare it with exact propagation.
    Simulate(Common),
    /// Run a verification suite (the bundled one without --scenario).
    Verify(VerifyArgs),
    /// Diagonalize the [gks] coefficient matrix into rates and operators.
    Diagonalize(Common),
    /// Choi matrices of the generator's map at the [gks] times or checkpoints.
    Choi(Common),
    /// Mean variance of the single Lindblad operator under phase unravellings.
    VarianceScan(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Directory for output files; created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs serially. Defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Integrate without renormalizing the state after each step.
    #[arg(long)]
    pub no_renormalize: bool,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite TOML file, or a single scenario checked against exact propagation.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    opts: Options,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a.scenario, &a.opts),
        Command::Verify(a) => commands::verify(a.scenario.as_deref(), &a.opts),
        Command::Diagonalize(a) => commands::diagonalize(&a.scenario, &a.opts),
        Command::Choi(a) => commands::choi(&a.scenario, &a.opts),
        Command::VarianceScan(a) => commands::variance_scan(&a.scenario, &a.opts),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
