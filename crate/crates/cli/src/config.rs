//! Run configuration: optional config file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config file {path}, line {line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("config file {path}: {message}")]
    Json { path: String, message: String },
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error("parameter `{key}`: cannot parse `{value}` as {expected}")]
    Parse {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Key-value parameters with normalized keys (lowercase, `-` replaced by `_`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, String>);

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl Params {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    pub fn merge(&mut self, other: Params) {
        self.0.extend(other.0);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn f64(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.0
            .get(key)
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| ConfigError::Parse {
                    key: key.into(),
                    value: v.clone(),
                    expected: "a number",
                })
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or(ConfigError::Missing(key))
    }

    pub fn usize(&self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        self.0
            .get(key)
            .map(|v| {
                v.trim().parse::<usize>().map_err(|_| ConfigError::Parse {
                    key: key.into(),
                    value: v.clone(),
                    expected: "a nonnegative integer",
                })
            })
            .transpose()
    }

    pub fn u64(&self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        Ok(self.usize(key)?.map(|v| v as u64))
    }

    /// Rejects keys the command does not use, so typos do not pass silently.
    pub fn check_known(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::Invalid(format!(
                "unknown parameter `{k}`; expected one of: {}",
                known.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// Errors if more than one of the mutually exclusive keys is set.
    pub fn exclusive(&self, keys: &[&str]) -> Result<(), ConfigError> {
        let set: Vec<&str> = keys.iter().copied().filter(|k| self.contains(k)).collect();
        if set.len() > 1 {
            return Err(ConfigError::Invalid(format!(
                "parameters {} are mutually exclusive",
                set.join(" and ")
            )));
        }
        Ok(())
    }

    /// `+1`, `1`, `plus`, `-1` or `minus`.
    pub fn helicity(&self, key: &'static str) -> Result<Option<i32>, ConfigError> {
        self.0
            .get(key)
            .map(|v| match v.trim() {
                "+1" | "1" | "+" | "plus" => Ok(1),
                "-1" | "-" | "minus" => Ok(-1),
                _ => Err(ConfigError::Parse {
                    key: key.into(),
                    value: v.clone(),
                    expected: "+1 or -1",
                }),
            })
            .transpose()
    }
}

/// Reads `key = value` lines (with `#` comments) or a JSON object.
pub fn read_config_file(path: &Path) -> Result<Params, ConfigError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: name.clone(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        parse_json(&text, &name)
    } else {
        parse_lines(&text, &name)
    }
}

fn parse_json(text: &str, name: &str) -> Result<Params, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Json {
        path: name.into(),
        message: e.to_string(),
    })?;
    let serde_json::Value::Object(map) = value else {
        return Err(ConfigError::Json {
            path: name.into(),
            message: "top level must be an object".into(),
        });
    };
    let mut params = Params::default();
    for (k, v) in map {
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            other => {
                return Err(ConfigError::Json {
                    path: name.into(),
                    message: format!("value of `{k}` must be a number or string, got {other}"),
                })
            }
        };
        params.set(&k, s);
    }
    Ok(params)
}

fn parse_lines(text: &str, name: &str) -> Result<Params, ConfigError> {
    let mut params = Params::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                path: name.into(),
                line: i + 1,
            });
        };
        params.set(k, v.trim().trim_matches('"'));
    }
    Ok(params)
}
