//! Optional TOML config file. Each command reads the table named after it;
//! keys are the long flag names. A flag given on the command line wins.
//!
//! ```toml
//! [decode]
//! mode = "beam"
//! beam-width = 20
//! uncertainty = "on"
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub struct Config {
    table: toml::Table,
}

impl Config {
    pub fn empty() -> Self {
        Config { table: toml::Table::new() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(Config { table })
    }

    /// Flags overlaid on the config section for `command`. Unknown keys in
    /// the section are an error.
    pub fn layered<T: Serialize + DeserializeOwned>(&self, command: &str, flags: &T) -> Result<T> {
        let mut merged = match self.table.get(command) {
            None => serde_json::Map::new(),
            Some(toml::Value::Table(t)) => match serde_json::to_value(t)? {
                Value::Object(m) => m,
                _ => unreachable!("a table serializes to an object"),
            },
            Some(_) => bail!("config entry [{command}] must be a table"),
        };
        if let Value::Object(given) = serde_json::to_value(flags)? {
            for (k, v) in given {
                if !v.is_null() && v != Value::Bool(false) {
                    merged.insert(k, v);
                }
            }
        }
        serde_json::from_value(Value::Object(merged)).with_context(|| format!("invalid config for [{command}]"))
    }
}
