use std::process::ExitCode;

use clap::Parser;
use openness_cli::{exit_code, init_workers, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_workers().and_then(|()| run(cli));
    let code = match result {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
