//! Merging of JSON config files with command-line flags.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::UsageError;

pub fn load(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(UsageError(format!("config {} is not a JSON object", path.display())).into()),
        Err(e) => Err(UsageError(format!("config {}: {e}", path.display())).into()),
    }
}

/// Overlays the flags that were given on top of the config values. Keys use
/// the flag names with `-` replaced by `_`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: &Map<String, Value>) -> anyhow::Result<T> {
    let Value::Object(given) = serde_json::to_value(flags)? else {
        unreachable!("argument structs serialise to objects");
    };
    let mut merged = Map::new();
    for key in given.keys() {
        if let Some(v) = config.get(key) {
            merged.insert(key.clone(), v.clone());
        }
    }
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| UsageError(format!("config: {e}")).into())
}
