use std::process::ExitCode;

use clap::Parser;
use spiceu::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match spiceu::commands::run(&cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
