//! Provenance records: sorted `key=value` lines describing exactly how an
//! artifact was produced. The format doubles as the config-file format, so
//! a recorded run can be replayed directly from its provenance file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes the entries as sorted `key=value` lines.
pub fn write_provenance(path: &Path, entries: &BTreeMap<String, String>) -> Result<()> {
    let mut out = String::new();
    for (key, value) in entries {
        if key.is_empty() || key.contains(['=', '\n']) || value.contains('\n') {
            return Err(Error::Format(format!(
                "entry {key:?} = {value:?} cannot be recorded on one line"
            )));
        }
        out.push_str(key);
        out.push('=');
        out.push_str(value);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads `key=value` lines; blank lines are ignored, duplicate keys are an
/// error.
pub fn read_provenance(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut entries = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {line:?} is not key=value"))
        })?;
        if entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Format(format!("duplicate key {key:?}")));
        }
    }
    Ok(entries)
}
