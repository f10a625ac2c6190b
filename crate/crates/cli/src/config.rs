use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::output::{usage, CliResult};

const SECTIONS: [&str; 4] = ["expansion", "transport", "spin", "sweep"];

/// Parsed `--config` file: optional `out` and `points`, plus one object of
/// flag defaults per subcommand, keyed by long flag name.
#[derive(Debug, Default)]
pub struct Config {
    root: Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read config {}: {e}", path.display())),
        };
        let root = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return usage("config must be a JSON object"),
            Err(e) => return usage(format!("config {} is not valid JSON: {e}", path.display())),
        };
        for (k, v) in &root {
            let ok = match k.as_str() {
                "out" => v.is_string(),
                "points" => v.is_u64(),
                s if SECTIONS.contains(&s) => v.is_object(),
                _ => return usage(format!("unknown config key {k:?}")),
            };
            if !ok {
                return usage(format!("config key {k:?} has the wrong type"));
            }
        }
        Ok(Self { root })
    }

    pub fn out(&self) -> Option<&str> {
        self.root.get("out").and_then(Value::as_str)
    }

    pub fn points(&self) -> Option<usize> {
        self.root.get("points").and_then(Value::as_u64).map(|n| n as usize)
    }

    pub fn section(&self, name: &str) -> Map<String, Value> {
        self.root.get(name).and_then(Value::as_object).cloned().unwrap_or_default()
    }
}

/// Flags win; config entries fill the flags left unset.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, defaults: &Map<String, Value>) -> CliResult<T> {
    let Value::Object(mut merged) = serde_json::to_value(flags).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    for (k, v) in defaults {
        match merged.get(k) {
            None | Some(Value::Null) => {
                merged.insert(k.clone(), v.clone());
            }
            Some(_) => {}
        }
    }
    from_map(merged)
}

pub fn from_map<T: DeserializeOwned>(map: Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(map)).or_else(|e| usage(format!("bad setting: {e}")))
}
