//! `key=value` experiment manifests.
//!
//! One assignment per line; `#` starts a comment. Keys are the long flag
//! names with either `-` or `_` separators (`max-iters`, `max_iters`).

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

use crate::{CliError, EXIT_IO};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str, origin: &str) -> Result<Vec<Entry>, CliError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "{origin}:{}: expected key=value",
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::config(format!("{origin}:{}: empty key", i + 1)));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(CliError::config(format!(
                "{origin}:{}: duplicate key {key:?} (first set on line {})",
                i + 1,
                prev.line
            )));
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot read config {}: {e}", path.display()),
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Flags to append for every file entry not already given on the command
/// line. Unknown keys are rejected.
pub fn merge_args(
    cmd: &Command,
    matches: &ArgMatches,
    entries: &[Entry],
) -> Result<Vec<OsString>, CliError> {
    let mut extra = Vec::new();
    for e in entries {
        let Some(arg) = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()))
        else {
            return Err(CliError::config(format!(
                "config line {}: unknown key {:?} for `{}`",
                e.line,
                e.key,
                cmd.get_name()
            )));
        };
        if e.key == "config" {
            return Err(CliError::config(format!(
                "config line {}: nested config files are not supported",
                e.line
            )));
        }
        let id = arg.get_id().as_str();
        if matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        extra.push(OsString::from(format!("--{}={}", e.key, e.value)));
    }
    Ok(extra)
}
