mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use abac_logmine::Error;
use clap::Parser;

use args::{Cli, Command};

/// Exit statuses.
const USAGE: u8 = 1;
const DATA: u8 = 2;
const INTERNAL: u8 = 3;

fn status(e: &Error) -> u8 {
    match e {
        Error::Config(_) => USAGE,
        Error::Invariant(_) => INTERNAL,
        _ => DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    let res = match &cli.command {
        Command::Mine(a) => commands::mine(a, &argv),
        Command::Synth(a) => commands::synth(a, &argv),
        Command::Genlog(a) => commands::genlog(a, &argv),
        Command::Eval(a) => commands::eval(a, &argv),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("abac-mine: {e}");
            ExitCode::from(status(&e))
        }
    }
}
