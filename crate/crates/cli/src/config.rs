use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory};
use serde_json::{Map, Value};

use crate::args::Cli;
use crate::error::CliError;

const GLOBAL_KEYS: [&str; 4] = ["seed", "out", "format", "jobs"];

fn on_command_line(matches: &ArgMatches, id: &str) -> bool {
    matches!(
        matches.try_get_raw(id).map(|_| matches.value_source(id)),
        Ok(Some(ValueSource::CommandLine))
    )
}

/// Fills in values from a JSON object whose keys are long flag names.
/// Anything given on the command line is kept.
pub fn apply(cli: Cli, matches: &ArgMatches, path: &Path) -> Result<Cli, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let file: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    merge(cli, matches, file)
}

pub fn merge(cli: Cli, matches: &ArgMatches, file: Map<String, Value>) -> Result<Cli, CliError> {
    let internal = |e: serde_json::Error| CliError::Usage(format!("config: {e}"));
    let mut tree = serde_json::to_value(&cli).map_err(internal)?;

    let mut cmd = Cli::command();
    let mut leaf = matches;
    let mut names = Vec::new();
    while let Some((name, sub)) = leaf.subcommand() {
        let next = cmd
            .find_subcommand(name)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("unknown subcommand {name}")))?;
        cmd = next;
        names.push(name.to_string());
        leaf = sub;
    }

    for (key, value) in file {
        if GLOBAL_KEYS.contains(&key.as_str()) {
            if !on_command_line(matches, &key) && !on_command_line(leaf, &key) {
                tree[&key] = value;
            }
            continue;
        }
        let arg = cmd
            .get_arguments()
            .find(|a| !a.is_global_set() && a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Usage(format!("unknown config key {key:?}")))?;
        if on_command_line(leaf, arg.get_id().as_str()) {
            continue;
        }
        let mut node = &mut tree["command"];
        for name in &names {
            node = &mut node[name];
        }
        node[&key] = value;
    }

    serde_json::from_value(tree).map_err(internal)
}
