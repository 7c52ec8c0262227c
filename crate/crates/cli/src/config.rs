use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Key naming the subcommand in a resolved config.
pub const COMMAND_KEY: &str = "command";
pub const RESOLVED_CONFIG: &str = "resolved_config.json";

pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage(format!(
            "config {} must hold a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Replaces every field not given on the command line by its config value.
pub fn overlay<T: Serialize + DeserializeOwned>(
    args: T,
    matches: &ArgMatches,
    config: Option<&Map<String, Value>>,
    command: &str,
) -> Result<T, CliError> {
    let Some(config) = config else {
        return Ok(args);
    };
    let Value::Object(mut fields) = to_value(&args)? else {
        unreachable!("argument structs serialize to objects");
    };
    for (key, value) in config {
        if key == COMMAND_KEY {
            if value.as_str() != Some(command) {
                return Err(CliError::Usage(format!(
                    "config is for command {value}, not {command:?}"
                )));
            }
            continue;
        }
        if !fields.contains_key(key) {
            return Err(CliError::Usage(format!(
                "unknown config key {key:?} for {command}"
            )));
        }
        if matches.value_source(key) != Some(ValueSource::CommandLine) {
            fields.insert(key.clone(), value.clone());
        }
    }
    serde_json::from_value(Value::Object(fields))
        .map_err(|e| CliError::Usage(format!("config for {command}: {e}")))
}

/// The arguments plus the command name, loadable through `--config`.
pub fn resolved<T: Serialize>(args: &T, command: &str) -> Result<Value, CliError> {
    let mut value = to_value(args)?;
    if let Value::Object(map) = &mut value {
        map.insert(COMMAND_KEY.into(), Value::String(command.into()));
    }
    Ok(value)
}

pub fn write_resolved<T: Serialize>(args: &T, command: &str, path: &Path) -> Result<(), CliError> {
    write_json(path, &resolved(args, command)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn to_value<T: Serialize>(args: &T) -> Result<Value, CliError> {
    serde_json::to_value(args).map_err(|e| CliError::Internal(format!("serializing arguments: {e}")))
}
