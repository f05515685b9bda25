//! Minimal CSV emission: comma-separated cells, one header row, newline
//! line endings, no quoting (cells must not contain commas or newlines).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest round-trip decimal form of a float, stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a header row and the given data rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_row(&mut out, header.iter().copied())?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format(format!(
                "row with {} cells under a {}-column header",
                row.len(),
                header.len()
            )));
        }
        write_row(&mut out, row.iter().map(String::as_str))?;
    }
    out.flush()?;
    Ok(())
}

fn write_row<'a>(
    out: &mut impl Write,
    cells: impl Iterator<Item = &'a str>,
) -> Result<()> {
    let mut first = true;
    for cell in cells {
        if cell.contains(',') || cell.contains('\n') {
            return Err(Error::Format(format!(
                "cell {cell:?} contains a delimiter"
            )));
        }
        if !first {
            out.write_all(b",")?;
        }
        out.write_all(cell.as_bytes())?;
        first = false;
    }
    out.write_all(b"\n")?;
    Ok(())
}
