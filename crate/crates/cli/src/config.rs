//! Flat `key = value` configuration files and the merged, typed run configuration.
//!
//! Precedence, highest first: command-line flags, the config file, the
//! documented defaults. `output_dir` additionally falls back to
//! `$DECOH_OUTPUT_DIR` before its built-in default.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::CliError;
use crate::keys::{self, Command, Key, Kind};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Count(usize),
    Seed(u64),
    Text(String),
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses the TOML-compatible subset: bare keys, bare or double-quoted
/// values, `#` comments, blank lines.
pub fn parse_text(text: &str, origin: &str) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: &str| CliError::Syntax {
            origin: origin.to_string(),
            line,
            msg: msg.to_string(),
        };
        let (key, value) = content.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(syntax("keys are bare identifiers"));
        }
        let value = value.trim();
        let value = match value.strip_prefix('"') {
            Some(rest) => rest.strip_suffix('"').ok_or_else(|| syntax("unterminated string"))?.to_string(),
            None if value.is_empty() => return Err(syntax("missing value")),
            None => value.to_string(),
        };
        entries.push(Entry {
            key: key.to_string(),
            value,
            line,
        });
    }
    Ok(entries)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

#[derive(Debug, Clone)]
pub struct Config {
    pub command: Command,
    pub values: BTreeMap<&'static str, Value>,
    pub output_dir: PathBuf,
}

impl Config {
    /// Merges file entries and flag values over the defaults and type-checks
    /// every key. Warnings (duplicates) are returned for the caller to print.
    pub fn resolve(
        command: Command,
        file: &[Entry],
        flags: &[(String, String)],
        env_output_dir: Option<String>,
    ) -> Result<(Config, Vec<String>), CliError> {
        let table = keys::keys(command);
        let mut warnings = Vec::new();
        let mut raw: BTreeMap<&'static str, String> = BTreeMap::new();
        let mut seen_line: BTreeMap<String, usize> = BTreeMap::new();

        for e in file {
            if e.key == "command" {
                if e.value != command.name() {
                    return Err(CliError::Invalid(format!(
                        "config file is for command `{}` but `{}` was requested",
                        e.value, command
                    )));
                }
                continue;
            }
            let key = lookup(&table, &e.key)?;
            if let Some(prev) = seen_line.insert(e.key.clone(), e.line) {
                warnings.push(format!(
                    "duplicate key `{}` on line {} overrides line {}",
                    e.key, e.line, prev
                ));
            }
            raw.insert(key.name, e.value.clone());
        }
        for (name, value) in flags {
            let key = lookup(&table, name)?;
            raw.insert(key.name, value.clone());
        }

        let mut values = BTreeMap::new();
        for key in &table {
            let text = match (raw.get(key.name), key.default) {
                (Some(v), _) => v.clone(),
                (None, Some(d)) => d.to_string(),
                (None, None) => continue,
            };
            values.insert(key.name, convert(key, &text)?);
        }
        let output_dir = match values.remove("output_dir") {
            Some(Value::Text(dir)) => dir,
            _ => env_output_dir
                .filter(|d| !d.is_empty())
                .unwrap_or_else(|| keys::DEFAULT_OUTPUT_DIR.to_string()),
        };
        if output_dir.is_empty() {
            return Err(CliError::Invalid("output_dir must not be empty".into()));
        }
        Ok((
            Config {
                command,
                values,
                output_dir: PathBuf::from(output_dir),
            },
            warnings,
        ))
    }

    pub fn float(&self, name: &str) -> f64 {
        match self.values.get(name) {
            Some(Value::Float(x)) => *x,
            other => panic!("key `{name}` is not a resolved real: {other:?}"),
        }
    }

    pub fn int(&self, name: &str) -> i64 {
        match self.values.get(name) {
            Some(Value::Int(x)) => *x,
            other => panic!("key `{name}` is not a resolved integer: {other:?}"),
        }
    }

    pub fn count(&self, name: &str) -> usize {
        match self.values.get(name) {
            Some(Value::Count(x)) => *x,
            other => panic!("key `{name}` is not a resolved count: {other:?}"),
        }
    }

    pub fn seed(&self) -> u64 {
        match self.values.get("seed") {
            Some(Value::Seed(x)) => *x,
            other => panic!("seed is not resolved: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match self.values.get(name) {
            Some(Value::Text(x)) => x,
            other => panic!("key `{name}` is not resolved text: {other:?}"),
        }
    }

    /// Resolved settings other than the seed as `key=value` pairs in key
    /// order, for the summary.
    pub fn summary_pairs(&self) -> Vec<(String, String)> {
        self.values
            .iter()
            .filter(|(k, _)| **k != "seed")
            .map(|(k, v)| {
                let text = match v {
                    Value::Float(x) => decoh_core::csv::float(*x),
                    Value::Int(x) => x.to_string(),
                    Value::Count(x) => x.to_string(),
                    Value::Seed(x) => x.to_string(),
                    Value::Text(x) => x.clone(),
                };
                (k.to_string(), text)
            })
            .collect()
    }
}

fn lookup<'a>(table: &'a [Key], name: &str) -> Result<&'a Key, CliError> {
    table
        .iter()
        .find(|k| k.name == name)
        .ok_or_else(|| CliError::UnknownKey(name.to_string()))
}

fn convert(key: &Key, text: &str) -> Result<Value, CliError> {
    let mismatch = || CliError::TypeMismatch {
        key: key.name.to_string(),
        expected: key.kind.describe(),
        value: text.to_string(),
    };
    Ok(match key.kind {
        Kind::Float => {
            let x: f64 = text.parse().map_err(|_| mismatch())?;
            if !x.is_finite() {
                return Err(mismatch());
            }
            Value::Float(x)
        }
        Kind::Int => Value::Int(text.parse().map_err(|_| mismatch())?),
        Kind::Count => Value::Count(text.parse().map_err(|_| mismatch())?),
        Kind::Seed => Value::Seed(text.parse().map_err(|_| mismatch())?),
        Kind::Text => Value::Text(text.to_string()),
        Kind::Choice(options) => {
            if !options.contains(&text) {
                return Err(mismatch());
            }
            Value::Text(text.to_string())
        }
    })
}
