use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use acs_core::persist::parse_config_text;
use log::warn;

use crate::CliError;

/// Values from a `key = value` file, overridden by same-named flags.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: BTreeSet::new() })
    }

    #[cfg(test)]
    pub fn from_map(file: BTreeMap<String, String>) -> Self {
        Self { file, used: BTreeSet::new() }
    }

    /// Flag, else config entry, else nothing.
    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.insert(key.to_owned());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {key}: cannot parse {raw:?}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.opt(key, flag)?.unwrap_or(default))
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| {
            CliError::Usage(format!("--{} is required (flag or config key {key})", key.replace('_', "-")))
        })
    }

    /// Warns about config keys no command looked at.
    pub fn warn_unused(&self) {
        for key in self.file.keys().filter(|k| !self.used.contains(*k)) {
            warn!("config key {key} is not used by this command");
        }
    }
}
