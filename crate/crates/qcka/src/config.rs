//! Flat `key = value` config files. Keys are the long flag names without the
//! leading dashes; `#` starts a comment. Values from the file replace the
//! built-in defaults, and flags given on the command line replace both.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                bail!("config line {}: unknown key `{key}`", lineno + 1);
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed lookup; an unparsable value is an error rather than a silent default.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get_raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
            .transpose()
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "p",
    "signals",
    "m",
    "q",
    "qz",
    "qz-ratio",
    "epsilon",
    "error-formula",
    "seed",
    "output",
    "format",
    "trials",
    "samples",
    "q-from",
    "q-to",
    "q-step",
    "signals-from",
    "signals-to",
    "points",
];
