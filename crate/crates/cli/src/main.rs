mod args;
mod config;
mod output;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::{merge, Config};
use output::{usage, write_outcome, CliResult, Ctx, DEFAULT_POINTS, DEFAULT_REL_TOL};

const TOL_VAR: &str = "STA_FORGE_TOL";

fn rel_tol() -> CliResult<f64> {
    let Ok(text) = std::env::var(TOL_VAR) else { return Ok(DEFAULT_REL_TOL) };
    match text.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => usage(format!("{TOL_VAR} must be a real in (0, 1), got {text:?}")),
    }
}

fn execute(cli: Cli) -> CliResult<String> {
    let config = Config::load(cli.config.as_deref())?;
    let points = cli.points.or(config.points()).unwrap_or(DEFAULT_POINTS);
    if points < 2 {
        return usage(format!("--points must be at least 2, got {points}"));
    }
    let dir = cli.out.or_else(|| config.out().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx { points, rel_tol: rel_tol()?, design_only: false };
    let (command, outcome) = match &cli.command {
        Command::Expansion(a) => ("expansion", run::expansion(&merge(a, &config.section("expansion"))?, &ctx)?),
        Command::Transport(a) => ("transport", run::transport(&merge(a, &config.section("transport"))?, &ctx)?),
        Command::Spin(a) => ("spin", run::spin(&merge(a, &config.section("spin"))?, &ctx)?),
        Command::Sweep(a) => ("sweep", sweep::sweep(&merge(a, &config.section("sweep"))?, &config, &ctx, &dir)?),
    };
    write_outcome(&dir, command, &outcome)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sta-forge: {e}");
            e.exit_code()
        }
    }
}
