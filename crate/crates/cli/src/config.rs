//! TOML config: one table per subcommand, keys named like the long flags.
//! Values found there replace the corresponding flag values.

use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::errors::ParseError;

pub fn load(path: &Path) -> anyhow::Result<toml::Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ParseError { line: None, msg: format!("{}: {e}", path.display()) })?;
    const KNOWN: [&str; 6] = ["estimate", "assess", "span", "coverage", "grid", "trajectory"];
    if let Some(k) = table.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(ParseError { line: None, msg: format!("{}: unknown section [{k}]", path.display()) }.into());
    }
    Ok(table)
}

/// Replace fields of `args` by the keys of `section`.
pub fn overlay<T: Serialize + DeserializeOwned>(args: T, section: Option<&toml::Value>) -> anyhow::Result<T> {
    let Some(section) = section else { return Ok(args) };
    let Some(over) = section.as_table() else {
        return Err(ParseError { line: None, msg: "config section is not a table".into() }.into());
    };
    let mut base = match toml::Value::try_from(&args)? {
        toml::Value::Table(t) => t,
        _ => unreachable!("argument structs serialize to tables"),
    };
    for (k, v) in over {
        base.insert(k.clone(), v.clone());
    }
    toml::Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| ParseError { line: None, msg: format!("config: {e}") }.into())
}
