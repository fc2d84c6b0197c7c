mod args;
mod commands;
mod record;
mod report;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Contract(String),
}

impl CliError {
    fn status(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Contract(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "input/output error: {m}"),
            CliError::Contract(m) => write!(f, "{m}"),
        }
    }
}

impl From<sketchsynth::Error> for CliError {
    fn from(e: sketchsynth::Error) -> Self {
        if e.is_contract_violation() {
            CliError::Contract(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Dataset(a) => commands::dataset(&a),
        Command::Record(a) => record::record(&a),
        Command::Replay(a) => commands::replay(&a),
        Command::Report(a) => report::report(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sketchsynth: {e}");
            ExitCode::from(e.status())
        }
    }
}
