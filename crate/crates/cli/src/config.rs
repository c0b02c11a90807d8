//! Run configuration: command-line flags over a TOML config file over defaults.
//!
//! A config file holds one table per subcommand, with keys named like the long flags
//! in snake case:
//!
//! ```toml
//! [simulate]
//! horizon = 1e4
//! seed = 7
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::InvalidInput;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| InvalidInput(e.to_string()))?;
        match serde_json::to_value(table)? {
            Value::Object(sections) => Ok(Self { sections }),
            _ => Err(InvalidInput("config file must be a table".into()).into()),
        }
    }

    /// Merges the flags that were given over the `section` table and deserializes the
    /// result; absent keys take the defaults of `R`.
    pub fn resolve<R: DeserializeOwned>(&self, section: &str, flags: &impl Serialize) -> Result<R> {
        let mut merged = match self.sections.get(section) {
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(InvalidInput(format!("config entry [{section}] must be a table")).into()),
            None => Map::new(),
        };
        if let Value::Object(given) = serde_json::to_value(flags)? {
            for (k, v) in given {
                let empty = v.is_null() || v.as_array().is_some_and(Vec::is_empty);
                if !empty {
                    merged.insert(k, v);
                }
            }
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| InvalidInput(format!("{section}: {e}")).into())
    }
}
