use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use recest_cli::{exit, run, Cli};

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            // clap reports usage errors with status 2, which is reserved here
            // for violated conditions.
            let _ = e.print();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            }
        }
    }
}
