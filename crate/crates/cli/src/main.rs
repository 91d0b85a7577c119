//! `fedsynth`: generate and evaluate differentially private synthetic
//! datasets, centrally or across simulated federated clients.
//!
//! Exit codes: 0 on success, 2 for anything the user can fix (flags, files,
//! unreachable privacy targets), 1 for internal errors. Failures print one
//! machine-readable line to stderr: `error: <category>: <detail>`.

mod cli;
mod commands;
mod config;

use clap::Parser;

fn main() {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::inject(raw) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {}: {e}", e.category());
            std::process::exit(e.exit_code());
        }
    };

    let parsed = cli::Cli::parse_from(args);
    let result = match parsed.command {
        cli::Command::Calibrate(args) => commands::calibrate(args),
        cli::Command::Account(args) => commands::account(args),
        cli::Command::Generate(args) => commands::generate(args),
        cli::Command::Evaluate(args) => commands::evaluate(args),
        cli::Command::Sweep(args) => commands::run_sweep(args),
        cli::Command::MakeBlobs(args) => commands::run_make_blobs(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}: {e}", e.category());
        std::process::exit(e.exit_code());
    }
}
