//! Flat `key = value` configuration files.
//!
//! Lines are `key = value`, `#` starts a comment, keys use dotted namespaces
//! (`noise.m_max`). Every command declares its keys with defaults; unknown
//! and repeated keys are rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    /// One of the listed words; any word when empty.
    Word(&'static [&'static str]),
    /// Comma-separated floats or `start:stop:count`.
    FloatList,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
}

pub const fn key(key: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec { key, kind, default }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    raw: String,
    line: Option<usize>,
}

/// Parsed `key = value` lines before they are checked against a schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError {
                line: Some(n),
                message: format!("expected `key = value`, got `{body}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            let valid = !k.is_empty()
                && k.split('.').all(|part| {
                    !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                });
            if !valid {
                return Err(ConfigError {
                    line: Some(n),
                    message: format!("malformed key `{k}`"),
                });
            }
            if v.is_empty() {
                return Err(ConfigError {
                    line: Some(n),
                    message: format!("key `{k}` has no value"),
                });
            }
            if let Some((_, _, first)) = entries.iter().find(|e| e.0 == k) {
                return Err(ConfigError {
                    line: Some(n),
                    message: format!("key `{k}` repeated (first set on line {first})"),
                });
            }
            entries.push((k.to_string(), v.to_string(), n));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Sets `key` as if it were written on the command line.
    pub fn set(&mut self, key: &str, value: String) {
        self.entries.retain(|e| e.0 != key);
        self.entries.push((key.to_string(), value, 0));
    }
}

/// A raw config checked against a schema, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Config {
    specs: Vec<KeySpec>,
    values: BTreeMap<&'static str, Entry>,
}

impl Config {
    pub fn resolve(raw: &RawConfig, specs: &[KeySpec]) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, v, line) in &raw.entries {
            let spec = specs.iter().find(|s| s.key == k).ok_or_else(|| ConfigError {
                line: (*line > 0).then_some(*line),
                message: format!("unknown key `{k}`"),
            })?;
            values.insert(
                spec.key,
                Entry {
                    raw: v.clone(),
                    line: (*line > 0).then_some(*line),
                },
            );
        }
        for s in specs {
            values.entry(s.key).or_insert_with(|| Entry {
                raw: s.default.to_string(),
                line: None,
            });
        }
        let cfg = Self {
            specs: specs.to_vec(),
            values,
        };
        for s in specs {
            cfg.check_kind(s)?;
        }
        Ok(cfg)
    }

    fn check_kind(&self, s: &KeySpec) -> Result<(), ConfigError> {
        match s.kind {
            Kind::Float => self.f64(s.key).map(drop),
            Kind::Int => self.u64(s.key).map(drop),
            Kind::Bool => self.bool(s.key).map(drop),
            Kind::Word(_) => self.word(s.key).map(drop),
            Kind::FloatList => self.list(s.key).map(drop),
        }
    }

    fn entry(&self, key: &str) -> &Entry {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key `{key}` is not part of this command's schema"))
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.entry(key).raw
    }

    /// True when the key was set explicitly rather than defaulted.
    pub fn is_set(&self, key: &str) -> bool {
        self.entry(key).line.is_some()
    }

    pub fn invalid(&self, key: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError {
            line: self.entry(key).line,
            message: format!("`{key}`: {message}"),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.raw(key);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.invalid(key, format!("expected a finite number, got `{raw}`")))
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        let raw = self.raw(key);
        raw.parse::<u64>()
            .map_err(|_| self.invalid(key, format!("expected a nonnegative integer, got `{raw}`")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        Ok(self.u64(key)? as usize)
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.raw(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.invalid(key, format!("expected true or false, got `{other}`"))),
        }
    }

    pub fn word(&self, key: &str) -> Result<&str, ConfigError> {
        let raw = self.raw(key);
        let spec = self.specs.iter().find(|s| s.key == key);
        if let Some(KeySpec {
            kind: Kind::Word(choices),
            ..
        }) = spec
        {
            if !choices.is_empty() && !choices.contains(&raw) {
                return Err(self.invalid(key, format!("expected one of {}, got `{raw}`", choices.join(", "))));
            }
        }
        Ok(raw)
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.raw(key);
        parse_list(raw).map_err(|m| self.invalid(key, m))
    }

    /// Positive finite number.
    pub fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, format!("must be positive, got {v}")))
        }
    }

    /// Integer at least `min`.
    pub fn count(&self, key: &str, min: usize) -> Result<usize, ConfigError> {
        let v = self.usize(key)?;
        if v >= min {
            Ok(v)
        } else {
            Err(self.invalid(key, format!("must be at least {min}, got {v}")))
        }
    }

    /// Every key in schema order with its resolved value.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        self.specs.iter().map(|s| (s.key, self.raw(s.key).to_string())).collect()
    }

    /// The resolved configuration as a config file.
    pub fn to_text(&self) -> String {
        self.echo().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{}` is not a finite number", s.trim()))
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("range count `{}` is not an integer", parts[2].trim()))?;
        return match n {
            0 => Err("range count must be positive".into()),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    if parts.len() != 1 {
        return Err(format!("expected `a, b, ...` or `start:stop:count`, got `{raw}`"));
    }
    raw.split(',').map(num).collect()
}
