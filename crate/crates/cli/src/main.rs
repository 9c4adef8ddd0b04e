use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compact_scheme_cli::{execute, Command, RawConfig, RunConfig, Sink};

/// Fourth-order compact scheme for FKPP, FitzHugh-Nagumo and the cubic NLSE.
#[derive(Parser)]
#[command(name = "compact-scheme", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one problem: solution.csv, stats.csv, meta.txt
    Run(Common),
    /// Error and rate table over a doubling list of N: converge.csv
    Converge(Common),
    /// Errors of Richardson-extrapolated solutions: richardson.csv
    Richardson(Common),
    /// Average relaxation sweeps over a (nu, delta, N, predictor) grid: iterations.csv
    Iterations(Common),
    /// Fastest regime per target error: efficiency.csv
    Efficiency(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override a config key (repeatable), e.g. --set nu=0.4
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Only errors on the terminal
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Run(c) => (Command::Run, c),
        Cmd::Converge(c) => (Command::Converge, c),
        Cmd::Richardson(c) => (Command::Richardson, c),
        Cmd::Iterations(c) => (Command::Iterations, c),
        Cmd::Efficiency(c) => (Command::Efficiency, c),
    };
    let result = (|| {
        let mut raw = match &common.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        for assignment in &common.overrides {
            raw.set(assignment)?;
        }
        let cfg = RunConfig::resolve(&raw, command)?;
        execute(&cfg, &Sink { dir: &common.out, quiet: common.quiet })
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
