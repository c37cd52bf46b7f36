use std::process::ExitCode;

use clap::Parser;
use driverid_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driverid: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
