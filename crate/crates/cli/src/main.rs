mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// The request itself is malformed.
    Spec(String),
    Lib(montemix::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl From<montemix::Error> for CliError {
    fn from(e: montemix::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl CliError {
    fn is_invalid_spec(&self) -> bool {
        use montemix::Error as E;
        match self {
            CliError::Spec(_) => true,
            CliError::Lib(e) => matches!(
                e,
                E::InvalidPermutation(_)
                    | E::SizeMismatch { .. }
                    | E::OutOfRange(_)
                    | E::InvalidModel(_)
                    | E::InvalidDistribution(_)
                    | E::InvalidArgument(_)
                    | E::ExactCapExceeded { .. }
                    | E::NotApplicable(_)
            ),
            _ => false,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Spec(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Json(e) => e.to_string(),
        }
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("invalid_spec", e.render().to_string().trim().to_string(), 2),
    };
    let result = match &cli.command {
        Command::Exact(a) => commands::exact(a),
        Command::Match(a) => commands::matching(a),
        Command::LrevKernel(a) => commands::lrev_kernel(a),
        Command::Mc(a) => commands::mc(a),
        Command::Check(a) => commands::check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is_invalid_spec() => fail("invalid_spec", e.message(), 2),
        Err(e) => fail("runtime", e.message(), 1),
    }
}
