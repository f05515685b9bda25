//! Dataset files: a four-byte magic, a fixed header (sample count, channels,
//! time, sampling rate), then per record a subject id, a label byte, and the
//! sample as 32-bit little-endian floats in row-major order.
//!
//! Label `255` marks unlabeled data (synthesized inputs, reconstructions,
//! saliency maps); such files cannot be converted to a training dataset.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::train::LabeledDataset;

const MAGIC: &[u8; 4] = b"EPD1";

/// Label byte for records that carry maps or synthesized signals rather
/// than class members.
pub const UNLABELED: u8 = 255;

/// One stored sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub subject_id: u32,
    pub label: u8,
    /// Channels x time.
    pub data: Tensor,
}

/// A dataset file in memory: raw records plus the signal geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub channels: usize,
    pub time: usize,
    pub fs: f64,
    pub records: Vec<Record>,
}

impl DatasetFile {
    pub fn new(channels: usize, time: usize, fs: f64) -> Self {
        DatasetFile {
            channels,
            time,
            fs,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, subject_id: u32, label: u8, data: Tensor) -> Result<()> {
        if data.shape() != [self.channels, self.time] {
            return Err(Error::ShapeMismatch(format!(
                "record shape {:?} vs file geometry [{}, {}]",
                data.shape(),
                self.channels,
                self.time
            )));
        }
        self.records.push(Record {
            subject_id,
            label,
            data,
        });
        Ok(())
    }

    /// Wraps a labeled dataset for writing.
    pub fn from_labeled(dataset: &LabeledDataset, fs: f64) -> Result<Self> {
        let shape = dataset.sample(0).shape();
        let mut file = DatasetFile::new(shape[0], shape[1], fs);
        for i in 0..dataset.labels().len() {
            file.push(
                dataset.subject_id(i),
                dataset.label(i),
                dataset.sample(i).clone(),
            )?;
        }
        Ok(file)
    }

    /// Validates the records as a binary-labeled training dataset.
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let mut samples = Vec::with_capacity(self.records.len());
        let mut labels = Vec::with_capacity(self.records.len());
        let mut subjects = Vec::with_capacity(self.records.len());
        for r in self.records {
            samples.push(r.data);
            labels.push(r.label);
            subjects.push(r.subject_id);
        }
        LabeledDataset::new(samples, labels, subjects)
    }
}

/// Writes all records with the file's geometry header.
pub fn save_dataset(path: &Path, file: &DatasetFile) -> Result<()> {
    for r in &file.records {
        if r.data.shape() != [file.channels, file.time] {
            return Err(Error::ShapeMismatch(format!(
                "record shape {:?} vs file geometry [{}, {}]",
                r.data.shape(),
                file.channels,
                file.time
            )));
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(file.records.len() as u32).to_le_bytes())?;
    out.write_all(&(file.channels as u32).to_le_bytes())?;
    out.write_all(&(file.time as u32).to_le_bytes())?;
    out.write_all(&(file.fs as f32).to_le_bytes())?;
    for r in &file.records {
        out.write_all(&r.subject_id.to_le_bytes())?;
        out.write_all(&[r.label])?;
        for v in r.data.data() {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a dataset file, rejecting bad magic and truncated or oversized
/// payloads.
pub fn load_dataset(path: &Path) -> Result<DatasetFile> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}; not a dataset file"
        )));
    }
    let mut u32_bytes = [0u8; 4];
    let mut read_u32 = |input: &mut BufReader<File>| -> Result<u32> {
        input.read_exact(&mut u32_bytes)?;
        Ok(u32::from_le_bytes(u32_bytes))
    };
    let count = read_u32(&mut input)? as usize;
    let channels = read_u32(&mut input)? as usize;
    let time = read_u32(&mut input)? as usize;
    let fs = f32::from_le_bytes({
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        b
    }) as f64;
    if channels == 0 || time == 0 {
        return Err(Error::Format(format!(
            "degenerate geometry [{channels}, {time}]"
        )));
    }
    let mut file = DatasetFile::new(channels, time, fs);
    let mut scratch = [0u8; 4];
    let mut truncated = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("file ends before the declared record count".into())
        } else {
            Error::Io(e)
        }
    };
    for _ in 0..count {
        input.read_exact(&mut scratch).map_err(&mut truncated)?;
        let subject_id = u32::from_le_bytes(scratch);
        let mut label = [0u8; 1];
        input.read_exact(&mut label).map_err(&mut truncated)?;
        let mut data = Tensor::zeros(&[channels, time]);
        for v in data.data_mut() {
            input.read_exact(&mut scratch).map_err(&mut truncated)?;
            *v = f32::from_le_bytes(scratch) as f64;
        }
        file.records.push(Record {
            subject_id,
            label: label[0],
            data,
        });
    }
    let mut rest = [0u8; 1];
    match input.read(&mut rest)? {
        0 => Ok(file),
        _ => Err(Error::Format("trailing bytes after the last record".into())),
    }
}
