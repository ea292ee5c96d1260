//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # cosine study
//! data.kind = cosine
//! data.samples = 1000
//! train.preset = cosine-2x10
//! train.epochs = 3000
//! prune.criterion = brute
//! prune.stop = fraction=0.5
//! ```
//!
//! Keys must carry one of the section prefixes `data.`, `train.`, `prune.` or
//! `sweep.`. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

pub const SECTIONS: [&str; 4] = ["data", "train", "prune", "sweep"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if cfg.entries.contains_key(k) {
                return Err(Error::Parse(format!("config line {}: duplicate key {k}", n + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Parse(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Inserts or replaces a key.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let section = key.split_once('.').map(|(s, _)| s);
        match section {
            Some(s) if SECTIONS.contains(&s) && key.len() > s.len() + 1 => {
                self.entries.insert(key.to_string(), value.into());
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!(
                "config key {key:?} must start with one of data., train., prune., sweep."
            ))),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parsed value of `key`, or `None` when absent.
    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical text form: sorted keys, one per line.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
