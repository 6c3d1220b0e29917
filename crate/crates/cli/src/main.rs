mod args;
mod commands;
mod config;
mod error;
mod output;

use std::panic;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use error::CliError;

fn run() -> Result<(), CliError> {
    let matches = Cli::command().get_matches();
    let mut cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = cli.config.clone() {
        cli = config::apply(cli, &matches, &path)?;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    let table = commands::execute(&cli)?;
    let format = cli.format.unwrap_or_else(|| table.default_format());
    let text = output::render(&table, format)?;
    output::emit(&text, cli.out.as_deref())
}

fn main() -> ExitCode {
    panic::set_hook(Box::new(|info| eprintln!("error: internal failure: {info}")));
    match panic::catch_unwind(run) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
