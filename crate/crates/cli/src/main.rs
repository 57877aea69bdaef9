//! `sandwich`: reproducible experiments with DA and sandwich samplers.
//!
//! Exit status: 0 on success, 1 for bad input or usage, 2 when a checked
//! property fails.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{bounds::BoundsArgs, lab::LabArgs, qr::QrArgs};
use output::Failure;

#[derive(Debug, Parser)]
#[command(name = "sandwich", version, about = "Spectral lab, quantile regression samplers and matrix bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare DA and sandwich spectra on a finite joint table.
    Lab(LabArgs),
    /// Run DA or sandwich chains for Bayesian quantile regression.
    Qr(QrArgs),
    /// Check the recursive matrix bound or the uniform least-squares bound.
    Bounds(BoundsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Lab(args) => commands::lab::run(args),
        Command::Qr(args) => commands::qr::run(args),
        Command::Bounds(args) => commands::bounds::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            output::error(&msg);
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            output::error(&msg);
            ExitCode::from(2)
        }
    }
}
