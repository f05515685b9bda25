//! File formats and report emitters: binary weight and dataset files, CSV
//! tables, SVG line plots, and re-runnable provenance records.

pub mod csv;
pub mod dataset;
pub mod provenance;
pub mod svg;
pub mod weights;

pub use csv::{fmt_f64, write_csv};
pub use dataset::{load_dataset, save_dataset, DatasetFile, Record, UNLABELED};
pub use provenance::{read_provenance, write_provenance};
pub use svg::{Band, LinePlot, Series};
pub use weights::{load_weights, save_weights};
