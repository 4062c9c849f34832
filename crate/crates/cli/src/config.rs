//! Flat `key = value` configuration files.
//!
//! ```text
//! seed = 7            # keys before any section apply to every subcommand
//! [compare]
//! preset = scalogram
//! tol = 1e-3
//! ```
//!
//! Underscores and dashes in keys are interchangeable. Command-line flags
//! override section keys, which override global keys.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    global: HashMap<String, String>,
    sections: HashMap<String, HashMap<String, String>>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = ConfigFile::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(format!("line {}: unterminated section header", i + 1))?;
                section = Some(name.trim().to_string());
                cfg.sections.entry(name.trim().to_string()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(format!("line {}: expected `key = value`, got {line:?}", i + 1))?;
            let (k, v) = (normalize(k), v.trim().to_string());
            if k.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            let map = match &section {
                Some(s) => cfg.sections.get_mut(s).unwrap(),
                None => &mut cfg.global,
            };
            if map.insert(k.clone(), v).is_some() {
                return Err(format!("line {}: duplicate key {k:?}", i + 1));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        let key = normalize(key);
        self.sections.get(section).and_then(|m| m.get(&key)).or_else(|| self.global.get(&key)).map(String::as_str)
    }
}

/// Looks up an option: flag first, then the subcommand's section, then the
/// global keys.
#[derive(Debug, Clone, Copy)]
pub struct Resolver<'a> {
    pub cfg: Option<&'a ConfigFile>,
    pub section: &'a str,
}

impl Resolver<'_> {
    pub fn get<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.and_then(|c| c.get(self.section, key)) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Config(format!("config key {key:?} = {v:?}: {e}"))),
        }
    }

    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}
