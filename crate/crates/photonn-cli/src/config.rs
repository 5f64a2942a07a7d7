//! Layered run configuration.
//!
//! Values resolve in precedence order: command-line flag, then the TOML
//! config file (section named after the subcommand, e.g. `[train-xor]`;
//! `seed` and `out_dir` may also sit at the top level), then the built-in
//! default. Unknown keys in a consulted section are rejected so typos fail
//! loudly instead of silently falling back to defaults.

use crate::error::CliError;
use std::path::Path;

pub struct FileConfig {
    root: toml::Table,
}

impl FileConfig {
    /// Loads `path` if given; no file means every lookup falls through.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let root = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                text.parse::<toml::Table>().map_err(|e| {
                    CliError::Usage(format!("cannot parse config {}: {e}", p.display()))
                })?
            }
        };
        Ok(Self { root })
    }

    /// Top-level `seed` value, if present.
    pub fn root_seed(&self) -> Result<Option<u64>, CliError> {
        match self.root.get("seed") {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(CliError::Usage(format!(
                "config key `seed` must be a non-negative integer, got {v}"
            ))),
        }
    }

    /// Top-level `out_dir` value, if present.
    pub fn root_out_dir(&self) -> Result<Option<String>, CliError> {
        match self.root.get("out_dir") {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(CliError::Usage(format!(
                "config key `out_dir` must be a string, got {v}"
            ))),
        }
    }

    /// Section for one subcommand; `allowed` lists every key the command
    /// understands, and anything else in the section is an error.
    pub fn section<'a>(
        &'a self,
        name: &str,
        allowed: &[&str],
    ) -> Result<Section<'a>, CliError> {
        let table = match self.root.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "config section `{name}` must be a table, got {v}"
                )))
            }
        };
        if let Some(t) = table {
            for key in t.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(CliError::Usage(format!(
                        "unknown key `{key}` in config section `{name}` \
                         (known keys: {})",
                        allowed.join(", ")
                    )));
                }
            }
        }
        Ok(Section {
            name: name.to_string(),
            table,
        })
    }
}

pub struct Section<'a> {
    name: String,
    table: Option<&'a toml::Table>,
}

impl Section<'_> {
    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn type_err(&self, key: &str, want: &str, got: &toml::Value) -> CliError {
        CliError::Usage(format!(
            "config key `{}.{key}` must be {want}, got {got}",
            self.name
        ))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.type_err(key, "a number", v)),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(self.type_err(key, "a non-negative integer", v)),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(self.type_err(key, "a string", v)),
        }
    }
}

/// Parses a comma-separated list of floats, e.g. `"0.25,0.5,1"`.
pub fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what}: expected a comma-separated list of numbers, got `{text}`"
        ))),
    }
}

/// Parses a comma-separated list of positive integers, e.g. `"4,10,100"`.
pub fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let vals: Result<Vec<usize>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what}: expected a comma-separated list of integers, got `{text}`"
        ))),
    }
}
