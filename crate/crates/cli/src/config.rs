//! TOML defaults for command flags.
//!
//! Top-level keys (`seed`, `out`) apply to every command. A table named
//! after a command (`[init]`, `[boosting]`, `[replay]`, ...) holds defaults
//! for that command's flags, keyed by the long flag name. Flags given on the
//! command line always win.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

/// Bad flags, bad config values, or anything else the user can fix by
/// changing the invocation. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Default)]
pub struct Config {
    table: toml::Table,
    path: Option<PathBuf>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        Ok(Config {
            table,
            path: Some(path.to_owned()),
        })
    }

    /// Value of `key` in `section` (or at the top level when `section` is
    /// `None`).
    pub fn value<T: DeserializeOwned>(&self, section: Option<&str>, key: &str) -> anyhow::Result<Option<T>> {
        let table = match section {
            None => Some(&self.table),
            Some(s) => match self.table.get(s) {
                None => None,
                Some(toml::Value::Table(t)) => Some(t),
                Some(_) => return Err(usage(format!("config: [{s}] must be a table"))),
            },
        };
        let Some(v) = table.and_then(|t| t.get(key)) else {
            return Ok(None);
        };
        v.clone().try_into().map(Some).map_err(|e| {
            let name = self.path.as_deref().map_or("config".into(), |p| p.display().to_string());
            let at = section.map_or(key.to_owned(), |s| format!("{s}.{key}"));
            usage(format!("{name}: bad value for {at}: {e}"))
        })
    }

    /// Command-line value, else the config default, else `fallback`.
    pub fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>, fallback: T) -> anyhow::Result<T> {
        Ok(self.pick_opt(section, key, flag)?.unwrap_or(fallback))
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.value(Some(section), key),
        }
    }
}
