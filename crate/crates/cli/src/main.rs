//! `serrin`: batch front end for the torsion-problem solvers.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation error, 3 solver failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::config::{parse_config, Command, Flags};

#[derive(Debug, Parser)]
#[command(
    name = "serrin",
    version,
    about = "Torsion problem on space forms: radial oracles, FEM solves and rigidity probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("E_USAGE: {first}");
            return ExitCode::from(2);
        }
    };

    let result =
        parse_config(cli.command, &cli.flags).map_err(commands::CliError::from).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
