//! Library side of the `recest` command-line tool: argument definitions,
//! subcommand implementations and output encodings. The binary only parses
//! arguments, calls [`run`] and maps the result to an exit code.

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use recest::harness::HarnessError;
use recest::models::{ModelError, ModelRegistry};
use recest::EngineError;

pub mod args;
pub mod commands;
pub mod output;

pub use args::{Cli, Command};
pub use output::REPORT_SCHEMA_VERSION;

/// Exit statuses. No other codes are produced.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const VIOLATED: u8 = 2;
    pub const NUMERIC: u8 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A checked condition failed on the declared region.
    Violated,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    /// Numeric failure whose document is still worth writing.
    NumericWithOutput {
        message: String,
        bytes: Vec<u8>,
    },
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => exit::USAGE,
            CliError::Numeric(_) | CliError::NumericWithOutput { .. } => exit::NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) | CliError::NumericWithOutput { message: m, .. } => {
                write!(f, "numeric failure: {m}")
            }
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::NonFiniteUpdate { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Replication { source, .. } => CliError::from(source),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Runs a parsed command and returns the bytes to write and the outcome.
pub fn execute(cli: &Cli) -> Result<commands::Rendered, CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let registry = ModelRegistry::<f64>::with_builtins();
    match &cli.command {
        Command::Simulate(a) => commands::simulate_cmd(&registry, a),
        Command::Rate(a) => commands::rate_cmd(&registry, a, cli.threads),
        Command::Check(a) => commands::check_cmd(&registry, a),
        Command::Oracle(a) => commands::oracle_cmd(&registry, a),
        Command::Ktrace(a) => commands::ktrace_cmd(&registry, a),
    }
}

fn output_path(cli: &Cli) -> Option<&std::path::Path> {
    let out = match &cli.command {
        Command::Simulate(a) => &a.out,
        Command::Rate(a) => &a.out,
        Command::Check(a) => &a.out,
        Command::Oracle(a) => &a.out,
        Command::Ktrace(a) => &a.out,
    };
    out.output.as_deref()
}

fn emit(cli: &Cli, bytes: &[u8]) -> Result<(), CliError> {
    match output_path(cli) {
        Some(path) => fs::write(path, bytes).map_err(CliError::Io),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(CliError::Io)
        }
    }
}

/// Executes, writes the output and maps the result to an exit code.
/// Diagnostics go to standard error.
pub fn run(cli: &Cli) -> ExitCode {
    let code = match execute(cli) {
        Ok(rendered) => match emit(cli, &rendered.bytes) {
            Ok(()) => match rendered.outcome {
                Outcome::Success => exit::SUCCESS,
                Outcome::Violated => exit::VIOLATED,
            },
            Err(e) => {
                eprintln!("recest: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            if let CliError::NumericWithOutput { bytes, .. } = &e {
                if let Err(io) = emit(cli, bytes) {
                    eprintln!("recest: {io}");
                }
            }
            eprintln!("recest: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}
