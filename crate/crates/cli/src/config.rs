//! Settings resolution: command-line flag, then environment (where clap wires
//! one up), then a `key = value` config file, then the built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use onion_core::systems::SystemKind;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// One `key = value` per line; `#` starts a comment; keys use the long flag
    /// names (`omega0-min`, with `_` accepted for `-`).
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Flag value if given, else the config file's, else `default`.
pub fn resolve<T>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    Ok(match flag {
        Some(v) => v,
        None => config.get(key)?.unwrap_or(default),
    })
}

pub fn resolve_opt<T>(flag: Option<T>, config: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get(key),
    }
}

/// Defaults for the two reference families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemDefaults {
    pub omegac: f64,
    pub alpha: f64,
    pub omega0_ref: f64,
    pub omega0_min: f64,
    pub omega0_max: f64,
    pub omega0_step: f64,
    pub m_min: i32,
    pub m_max: i32,
}

pub fn defaults_for(kind: SystemKind) -> SystemDefaults {
    match kind {
        SystemKind::Isi => SystemDefaults {
            omegac: 5.5,
            alpha: 5.0,
            omega0_ref: 0.62,
            omega0_min: 0.40,
            omega0_max: 1.10,
            omega0_step: 0.005,
            m_min: -14,
            m_max: -6,
        },
        SystemKind::Hooke => SystemDefaults {
            omegac: 5.0,
            alpha: 0.0,
            omega0_ref: 0.5,
            omega0_min: 0.30,
            omega0_max: 0.90,
            omega0_step: 0.005,
            m_min: -10,
            m_max: -2,
        },
    }
}
