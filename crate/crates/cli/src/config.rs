//! Flat `key = value` run configuration. Precedence: flags, then file,
//! then defaults.

use std::path::Path;

use attrex::train::TrainConfig;
use attrex::ModelConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::failure::Failure;

/// Every tunable of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Minimum token frequency for the vocabulary.
    pub min_freq: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            min_freq: 1,
        }
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("config structs serialize to objects"),
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunSettings {
    /// Defaults, overridden by `file` entries, overridden by `flags`.
    pub fn resolve(
        base: RunSettings,
        file: Option<&Path>,
        flags: &[(String, String)],
    ) -> Result<Self, Failure> {
        let mut model = object(serde_json::to_value(&base.model).expect("model config"));
        let mut train = object(serde_json::to_value(&base.train).expect("train config"));
        let mut min_freq = base.min_freq;
        let mut entries = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            entries.extend(parse_config_text(&text)?);
        }
        entries.extend(flags.iter().cloned());
        for (key, raw) in entries {
            let key = key.replace('-', "_");
            let value = parse_value(&raw);
            if key == "predicates" {
                return Err(Failure::usage("predicates is derived from the corpus"));
            } else if key == "min_freq" {
                min_freq = serde_json::from_value(value)
                    .map_err(|e| Failure::usage(format!("min_freq: {e}")))?;
            } else if let Some(slot) = model.get_mut(&key) {
                *slot = value;
            } else if let Some(slot) = train.get_mut(&key) {
                *slot = value;
            } else {
                return Err(Failure::usage(format!(
                    "unknown configuration key {key}; known keys: {}",
                    Self::keys().join(", ")
                )));
            }
        }
        let model: ModelConfig = serde_json::from_value(Value::Object(model))
            .map_err(|e| Failure::usage(format!("model configuration: {e}")))?;
        let train: TrainConfig = serde_json::from_value(Value::Object(train))
            .map_err(|e| Failure::usage(format!("training configuration: {e}")))?;
        train.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(RunSettings {
            model,
            train,
            min_freq,
        })
    }

    /// All keys accepted by [`resolve`](Self::resolve).
    pub fn keys() -> Vec<String> {
        let d = RunSettings::default();
        let mut keys: Vec<String> = object(serde_json::to_value(&d.model).unwrap())
            .into_iter()
            .chain(object(serde_json::to_value(&d.train).unwrap()))
            .map(|(k, _)| k)
            .filter(|k| k != "predicates")
            .collect();
        keys.push("min_freq".into());
        keys
    }
}
