use std::process::ExitCode;

use clap::Parser;
use smoothcert_cli::{exit_code, run, stdout, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli, &mut stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
