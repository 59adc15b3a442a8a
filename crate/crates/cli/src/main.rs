//! `zsforms`: batch driver for the spectral pipeline.

mod config;
mod report;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::config::Cli;
use crate::run::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { run::EXIT_IO } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("zsforms: {message}");
            ExitCode::from(code)
        }
    }
}
