mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A problem with the invocation itself, such as conflicting flags.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_INPUT;
    }
    match err.downcast_ref::<chronovec::Error>() {
        Some(e) if e.is_input_error() => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    // clap itself exits with status 2 on malformed command lines
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Vocab(a) => commands::vocab(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Nn(a) => commands::nn(a),
        Command::Export(a) => commands::export(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
