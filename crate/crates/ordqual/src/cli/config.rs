//! Optional TOML config file. Keys are flag names (`-` or `_`); values given on
//! the command line win.

use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use toml::{Table, Value};

use super::CliError;

const KNOWN_KEYS: &[&str] = &[
    "format",
    "lenient",
    "unit",
    "population",
    "sample_counts",
    "zero_population",
    "penalty",
    "seed",
    "unweighted_pca",
    "max_iter",
    "draws",
    "bootstrap",
    "column",
    "baselines",
    "n",
    "kappa",
    "thresholds",
    "coefficients",
];

#[derive(Debug, Default)]
pub struct Config {
    table: Table,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Table =
            text.parse().map_err(|e: toml::de::Error| CliError::usage(format!("config: {}", e.message())))?;
        let mut table = Table::new();
        for (key, value) in raw {
            let key = key.replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("config: unknown key `{key}`")));
            }
            table.insert(key, value);
        }
        Ok(Self { table })
    }

    fn text(&self, key: &str) -> Option<String> {
        self.table.get(key).map(|v| match v {
            Value::String(s) => s.clone(),
            Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
            other => scalar(other),
        })
    }

    /// Command-line value, else config value, else `default`.
    pub fn value<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.optional(cli, key)?.unwrap_or(default))
    }

    pub fn optional<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        self.text(key).map(|s| s.parse::<T>().map_err(|e| CliError::usage(format!("config `{key}`: {e}")))).transpose()
    }

    pub fn choice<T: ValueEnum>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.text(key) {
            None => Ok(default),
            Some(s) => T::from_str(&s, true).map_err(|e| CliError::usage(format!("config `{key}`: {e}"))),
        }
    }

    /// Boolean switches: on if set on the command line or true in the config.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool, CliError> {
        match self.table.get(key) {
            _ if cli => Ok(true),
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(CliError::usage(format!("config `{key}`: expected true or false"))),
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
