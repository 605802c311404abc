mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status when every step ran but an audit did not pass; clap uses 2
/// for usage errors.
const AUDIT_FAILED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => commands::run(a).map(|_| true),
        Command::Verify(a) => commands::verify(a),
        Command::Gen(a) => commands::gen(a).map(|_| true),
        Command::Sweep(a) => commands::sweep(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("audit failed");
            ExitCode::from(AUDIT_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
