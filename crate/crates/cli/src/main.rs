mod commands;
mod output;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{PolicyArgs, ProfitArgs, RecommendArgs, TableArbArgs, TableFracArgs};
use simulate::SimulateArgs;

/// Confirmation policies against double-spend attacks with pre-mining.
#[derive(Debug, Parser)]
#[command(name = "premine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attack probability on an arbitrary block, by attacker share and
    /// confirmations.
    TableArb(TableArbArgs),
    /// Long-run fraction of blocks an optimal attacker reverses.
    TableFrac(TableFracArgs),
    /// Optimal attack action for each (attacker, honest) fork length.
    Policy(PolicyArgs),
    /// Confirmations needed to keep an attack below a target probability.
    Recommend(RecommendArgs),
    /// Run a seeded simulation described by a TOML file.
    Simulate(SimulateArgs),
    /// Revenue of a combined selfish-mining and double-spend attacker.
    ProfitCurve(ProfitArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] premine::Error),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use premine::Error as E;
        match self {
            Self::Io(_) => 1,
            Self::Usage(_) => 2,
            Self::Core(E::ParamDomain { .. } | E::MajorityAttacker { .. } | E::Config(_)) => 3,
            Self::Core(E::NoThreshold { .. } | E::NonConvergent { .. }) | Self::Numerical(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TableArb(args) => commands::table_arb(args),
        Command::TableFrac(args) => commands::table_frac(args),
        Command::Policy(args) => commands::policy(args),
        Command::Recommend(args) => commands::recommend(args),
        Command::Simulate(args) => simulate::run(args),
        Command::ProfitCurve(args) => commands::profit_curve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
