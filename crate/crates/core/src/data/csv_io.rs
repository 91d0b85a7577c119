//! CSV dataset interchange.
//!
//! Comma-delimited, `.` decimal separator, header row required. Values are
//! written with Rust's shortest-roundtrip float formatting, so a write/read
//! cycle reproduces every f64 bit-exactly.

use crate::data::{Dataset, SyntheticDataset};
use crate::error::{Error, Result};
use ndarray::Array2;
use std::io::Write;
use std::path::Path;

/// Reads a numeric CSV with a header row into a [`Dataset`].
///
/// `label_column` is the zero-based index of the integer label column; all
/// other columns become features in file order. When `num_classes` is given,
/// labels must lie below it; otherwise `K` is inferred as `max(label) + 1`.
pub fn read_csv_dataset(
    path: impl AsRef<Path>,
    label_column: usize,
    num_classes: Option<usize>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path.as_ref())
        .map_err(|e| Error::Parse(format!("cannot open csv: {e}")))?;

    let width = reader
        .headers()
        .map_err(|e| Error::Parse(format!("csv header: {e}")))?
        .len();
    if label_column >= width {
        return Err(Error::Parse(format!(
            "label column {label_column} out of range for {width} columns"
        )));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1, first data row is line 2.
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse(format!("csv row {line}: {e}")))?;
        for (col, cell) in record.iter().enumerate() {
            if col == label_column {
                let label: usize = cell.trim().parse().map_err(|_| {
                    Error::Parse(format!("csv row {line}: label {cell:?} is not a non-negative integer"))
                })?;
                if let Some(k) = num_classes {
                    if label >= k {
                        return Err(Error::Parse(format!(
                            "csv row {line}: label {label} is out of range for {k} classes"
                        )));
                    }
                }
                labels.push(label);
            } else {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    Error::Parse(format!("csv row {line}: cell {cell:?} is not numeric"))
                })?;
                features.push(value);
            }
        }
    }

    if labels.is_empty() {
        return Err(Error::Parse("csv has a header but no data rows".into()));
    }
    let k = num_classes.unwrap_or_else(|| labels.iter().max().map(|&m| m + 1).unwrap_or(1));
    let matrix = Array2::from_shape_vec((labels.len(), width - 1), features)
        .map_err(|e| Error::Contract(format!("csv shape construction failed: {e}")))?;
    Dataset::new(matrix, labels, k)
}

/// Writes a [`Dataset`] as CSV with header `f0,..,f{d-1},label`.
///
/// The write is atomic: data lands in a temporary file in the target
/// directory that is renamed into place only once complete.
pub fn write_csv_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |out| {
        let d = dataset.dim();
        let header: Vec<String> = (0..d).map(|j| format!("f{j}")).chain(["label".into()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for (row, &label) in dataset.features.rows().into_iter().zip(&dataset.labels) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{},{label}", cells.join(","))?;
        }
        Ok(())
    })
}

/// Writes a decoded synthetic dataset as feature CSV (soft labels dropped,
/// decoded labels kept), readable back through [`read_csv_dataset`].
pub fn write_synthetic_csv(ds: &SyntheticDataset, num_classes: usize, path: impl AsRef<Path>) -> Result<()> {
    let dataset = ds.to_dataset(num_classes)?;
    write_csv_dataset(&dataset, path)
}

/// Writes a text artifact atomically (temp file + rename).
pub fn write_text_atomic(path: impl AsRef<Path>, content: &str) -> Result<()> {
    write_atomic(path.as_ref(), |out| {
        out.write_all(content.as_bytes())?;
        Ok(())
    })
}

/// Writes generic string rows under a header as CSV, atomically. Used by the
/// sweep harness and other tabular artifacts.
pub fn write_csv_rows_atomic(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |out| {
        let mut writer = csv::Writer::from_writer(out);
        writer
            .write_record(header)
            .and_then(|_| rows.iter().try_for_each(|row| writer.write_record(row)))
            .map_err(|e| Error::Parse(format!("csv write: {e}")))?;
        writer.flush()?;
        Ok(())
    })
}

pub(crate) fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut std::io::BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    {
        let mut out = std::io::BufWriter::new(&mut tmp);
        write(&mut out)?;
        out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
