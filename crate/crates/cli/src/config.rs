use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use webformer::{Error, Result};

/// Flag overrides keyed by dotted config path, e.g. `model.layers`.
#[derive(Debug, Default)]
pub struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, key: &'static str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0
                .push((key, serde_json::to_value(v).expect("override serializes")));
        }
        self
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return;
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
}

/// Defaults, then the JSON file, then flag overrides. Unknown keys in the
/// file are rejected by the config type.
pub fn resolve<C>(file: Option<&Path>, overrides: &Overrides) -> Result<C>
where
    C: Serialize + DeserializeOwned + Default,
{
    let mut value = serde_json::to_value(C::default())?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if !patch.is_object() {
            return Err(Error::Config(format!(
                "{}: config must be a JSON object",
                path.display()
            )));
        }
        merge(&mut value, patch);
    }
    for (key, v) in &overrides.0 {
        set_path(&mut value, key, v.clone());
    }
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

pub fn print_resolved<C: Serialize>(command: &str, cfg: &C) {
    eprintln!(
        "{command} resolved config:\n{}",
        serde_json::to_string_pretty(cfg).expect("config serializes")
    );
}
