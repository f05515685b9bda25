//! One module per subcommand. Shared plumbing: every run that writes
//! artifacts also writes `<primary output>.prov`, the resolved key=value
//! record accepted back via `--config`.

pub mod am;
pub mod deconv;
pub mod eval;
pub mod psd;
pub mod rank;
pub mod saliency;
pub mod synth;
pub mod train;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eegprobe::io::write_provenance;
use eegprobe::nn::NeuronSelector;

use crate::config::parse_neuron;
use crate::CliError;

/// Writes the run record next to the command's primary artifact.
pub fn write_run_record(
    primary: &str,
    record: &BTreeMap<String, String>,
) -> Result<(), CliError> {
    let path = PathBuf::from(format!("{primary}.prov"));
    write_provenance(&path, record)?;
    Ok(())
}

/// Parses a `LAYER:UNIT` flag; the model rejects out-of-range addresses
/// when the selector is used.
pub fn neuron_for(text: &str) -> Result<NeuronSelector, CliError> {
    let (layer, unit) = parse_neuron(text)?;
    Ok(NeuronSelector::new(layer, unit))
}

/// Loads a dataset file, surfacing the path in the error message.
pub fn load_dataset_file(path: &str) -> Result<eegprobe::io::DatasetFile, CliError> {
    eegprobe::io::load_dataset(Path::new(path)).map_err(|e| match e {
        eegprobe::Error::Io(io) => {
            CliError::Fail(eegprobe::Error::Format(format!("{path}: {io}")))
        }
        other => CliError::Fail(other),
    })
}
