use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Parameter defaults read from a TOML file: top-level keys apply to every
/// command, a table named after the command (`[simulate]`, `[verify.clt]`)
/// overrides them.
#[derive(Debug, Default)]
pub struct FileConfig {
    root: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let table: toml::Table = toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        match serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))? {
            Value::Object(root) => Ok(FileConfig { root }),
            _ => Err(CliError::Config("configuration root must be a table".into())),
        }
    }

    fn values_for(&self, command: &str) -> Map<String, Value> {
        let mut out: Map<String, Value> = self
            .root
            .iter()
            .filter(|(_, v)| !v.is_object())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut node = Some(&self.root);
        for part in command.split('.') {
            node = node.and_then(|m| m.get(part)).and_then(Value::as_object);
        }
        if let Some(section) = node {
            for (k, v) in section.iter().filter(|(_, v)| !v.is_object()) {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }
}

/// Merges file values and flags, flags winning.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, file: &FileConfig, command: &str) -> CliResult<T> {
    let mut merged = file.values_for(command);
    let Value::Object(set) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in set.into_iter().filter(|(_, v)| !v.is_null()) {
        merged.insert(k, v);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("{command}: {e}")))
}

/// SHA-256 of the canonical JSON of the resolved parameters, excluding output
/// location, format and worker count.
pub fn config_hash<T: Serialize>(command: &str, params: &T) -> String {
    let mut value = serde_json::to_value(params).expect("parameters serialize");
    if let Value::Object(map) = &mut value {
        for key in ["out", "format", "workers"] {
            map.remove(key);
        }
    }
    let canonical = serde_json::json!({ "command": command, "params": value });
    let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("json serializes"));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
