//! JSON config files overlaid by command-line flags.
//!
//! Every command's arguments are a flat struct of optional fields, so a
//! config file is simply that struct as a JSON object. Flags that were given
//! replace the matching keys; everything else comes from the file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must hold a JSON object", path.display()),
    }
}

/// `flags` over `file`; keys absent from both stay unset.
pub fn merge<T: Serialize + DeserializeOwned>(file: Option<Map<String, Value>>, flags: &T) -> Result<T> {
    let mut merged = Value::Object(file.unwrap_or_default());
    overlay(&mut merged, serde_json::to_value(flags)?);
    serde_json::from_value(merged).context("config does not match the command's options")
}

/// Recursive key-wise overlay; nulls in `top` leave `base` untouched.
fn overlay(base: &mut Value, top: Value) {
    match (base, top) {
        (_, Value::Null) => {}
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                overlay(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}
