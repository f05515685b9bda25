//! Weight files: a four-byte magic, a length-prefixed text description of
//! the layer stack, then every parameter as 32-bit little-endian floats in
//! layer order (kernels row-major, then biases).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{LayerSpec, ModelSpec, Weights};

const MAGIC: &[u8; 4] = b"EPW1";

fn header_text(spec: &ModelSpec) -> String {
    let mut out = format!("input {} {}\n", spec.input_shape[0], spec.input_shape[1]);
    for layer in &spec.layers {
        let line = match layer {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                filters,
            } => format!("conv {kernel_h} {kernel_w} {filters}"),
            LayerSpec::MaxPool => "maxpool".to_string(),
            LayerSpec::Dropout { rate } => format!("dropout {rate}"),
            LayerSpec::Relu => "relu".to_string(),
            LayerSpec::Flatten => "flatten".to_string(),
            LayerSpec::FullyConnected { units } => format!("fc {units}"),
            LayerSpec::Softmax => "softmax".to_string(),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn parse_header(text: &str) -> Result<ModelSpec> {
    let bad = |line: &str| Error::Format(format!("unrecognized header line {line:?}"));
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty header".into()))?;
    let mut parts = first.split_whitespace();
    let (channels, time) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some("input"), Some(c), Some(t), None) => (
            c.parse().map_err(|_| bad(first))?,
            t.parse().map_err(|_| bad(first))?,
        ),
        _ => return Err(bad(first)),
    };
    let mut layers = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let layer = match fields.as_slice() {
            ["conv", kh, kw, f] => LayerSpec::Conv {
                kernel_h: kh.parse().map_err(|_| bad(line))?,
                kernel_w: kw.parse().map_err(|_| bad(line))?,
                filters: f.parse().map_err(|_| bad(line))?,
            },
            ["maxpool"] => LayerSpec::MaxPool,
            ["dropout", rate] => LayerSpec::Dropout {
                rate: rate.parse().map_err(|_| bad(line))?,
            },
            ["relu"] => LayerSpec::Relu,
            ["flatten"] => LayerSpec::Flatten,
            ["fc", units] => LayerSpec::FullyConnected {
                units: units.parse().map_err(|_| bad(line))?,
            },
            ["softmax"] => LayerSpec::Softmax,
            _ => return Err(bad(line)),
        };
        layers.push(layer);
    }
    Ok(ModelSpec::new(channels, time, layers))
}

/// Writes the model description and its parameters.
pub fn save_weights(path: &Path, spec: &ModelSpec, weights: &Weights) -> Result<()> {
    let template = Weights::zeros(spec)?;
    if !template.same_structure(weights) {
        return Err(Error::ShapeMismatch(
            "weights do not match the model description".into(),
        ));
    }
    let header = header_text(spec);
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u32).to_le_bytes())?;
    out.write_all(header.as_bytes())?;
    for buffer in weights.buffers() {
        for v in buffer {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a weight file back into the model description it declares and its
/// parameters; rejects wrong magic, malformed headers, and files whose
/// parameter payload does not exactly fit the declared stack.
pub fn load_weights(path: &Path) -> Result<(ModelSpec, Weights)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}; not a weight file"
        )));
    }
    let mut len_bytes = [0u8; 4];
    input.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header = vec![0u8; header_len];
    input.read_exact(&mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;
    let spec = parse_header(&header)?;
    spec.validate()?;
    let mut weights = Weights::zeros(&spec)?;
    let mut scratch = [0u8; 4];
    for buffer in weights.buffers_mut() {
        for v in buffer {
            input.read_exact(&mut scratch).map_err(|e| {
                if e.kind() == std::io::ErrorKind::UnexpectedEof {
                    Error::Format("parameter payload is shorter than the declared stack".into())
                } else {
                    Error::Io(e)
                }
            })?;
            *v = f32::from_le_bytes(scratch) as f64;
        }
    }
    let mut rest = [0u8; 1];
    match input.read(&mut rest)? {
        0 => Ok((spec, weights)),
        _ => Err(Error::Format(
            "trailing bytes after the parameter payload".into(),
        )),
    }
}
