//! Flag resolution with three-level precedence: command line, then config
//! file, then built-in default. The resolved values are collected into a
//! key=value map that doubles as the provenance record, so a recorded run
//! can be replayed with `--config <record>` alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use eegprobe::io::read_provenance;

use crate::CliError;

/// Merged view of one subcommand's settings.
pub struct Settings {
    file: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    /// Loads the optional config file and checks it was recorded for the
    /// same subcommand when it carries a `command` key.
    pub fn load(config: Option<&str>, command: &str) -> Result<Self, CliError> {
        let file = match config {
            Some(path) => read_provenance(Path::new(path))
                .map_err(|e| CliError::Usage(format!("config file {path}: {e}")))?,
            None => BTreeMap::new(),
        };
        let mut settings = Settings {
            file,
            consumed: BTreeSet::new(),
            resolved: BTreeMap::new(),
        };
        if let Some(recorded) = settings.file.get("command").cloned() {
            settings.consumed.insert("command".to_string());
            if recorded != command {
                return Err(CliError::Usage(format!(
                    "config file was recorded by `{recorded}`, not `{command}`"
                )));
            }
        }
        settings
            .resolved
            .insert("command".to_string(), command.to_string());
        Ok(settings)
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            Some(raw) => {
                self.consumed.insert(key.to_string());
                raw.parse().map(Some).map_err(|_| {
                    CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))
                })
            }
            None => Ok(None),
        }
    }

    fn record(&mut self, key: &str, value: &dyn Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Value with a default; the resolved value is recorded.
    pub fn get<T>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
    {
        let value = match cli {
            Some(v) => {
                self.consumed.insert(key.to_string());
                v
            }
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Value without a default; recorded only when present.
    pub fn get_opt<T>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
    {
        let value = match cli {
            Some(v) => {
                self.consumed.insert(key.to_string());
                Some(v)
            }
            None => self.from_file(key)?,
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    /// Mandatory value; missing from both sources is a usage error.
    pub fn require<T>(&mut self, key: &str, cli: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
    {
        self.get_opt(key, cli)?
            .ok_or_else(|| CliError::Usage(format!("missing --{key} (or {key}= in a config file)")))
    }

    /// Boolean switch: present on the command line wins, else the config
    /// file, else false.
    pub fn get_flag(&mut self, key: &str, cli: bool) -> Result<bool, CliError> {
        let value = if cli {
            self.consumed.insert(key.to_string());
            true
        } else {
            self.from_file(key)?.unwrap_or(false)
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Rejects unrecognized config keys and returns the provenance record.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if let Some(first) = unknown.first() {
            return Err(CliError::Usage(format!(
                "config file has {} unrecognized key(s), first: {first}",
                unknown.len()
            )));
        }
        Ok(self.resolved)
    }
}

/// Parses `LAYER:UNIT` into a neuron address.
pub fn parse_neuron(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || {
        CliError::Usage(format!(
            "neuron {text:?} is not of the form LAYER:UNIT, e.g. 7:0"
        ))
    };
    let (layer, unit) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        layer.trim().parse().map_err(|_| bad())?,
        unit.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses `LO:HI` into a frequency band.
pub fn parse_band(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || {
        CliError::Usage(format!(
            "band {text:?} is not of the form LO:HI, e.g. 6:8"
        ))
    };
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(CliError::Usage(format!(
            "band {text:?} must satisfy LO <= HI with finite bounds"
        )));
    }
    Ok((lo, hi))
}
