use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const ARTIFACT: &str = "omd-cli";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    /// What the check compares, in words.
    pub check: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl Provenance {
    pub fn new(
        command: &str,
        config_hash: String,
        seed: Option<u64>,
        replicas: Option<usize>,
        check: &'static str,
        timestamp: bool,
    ) -> Self {
        let timestamp_unix = timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Provenance {
            artifact: ARTIFACT,
            version: VERSION,
            command: command.to_string(),
            config_hash,
            seed,
            replicas,
            check,
            timestamp_unix,
        }
    }
}

/// `{"provenance": ..., "passed": ..., <body fields>}`.
pub fn envelope(provenance: &Provenance, passed: bool, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("provenance".into(), serde_json::to_value(provenance).expect("provenance serializes"));
    map.insert("passed".into(), Value::Bool(passed));
    match body {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Value::Object(map)
}

pub fn to_body<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize")
}

pub fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn write_json(out: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    write_bytes(out, text.as_bytes())
}

/// Writes CSV data and, when it goes to a file, a `<file>.meta.json` sidecar
/// carrying the provenance.
pub fn write_csv(out: Option<&Path>, csv: &[u8], provenance: &Provenance, passed: bool) -> CliResult<()> {
    write_bytes(out, csv)?;
    if let Some(path) = out {
        let mut meta = path.as_os_str().to_owned();
        meta.push(".meta.json");
        write_json(Some(Path::new(&meta)), &envelope(provenance, passed, Value::Object(Map::new())))?;
    }
    Ok(())
}
