//! Binary container for released synthetic datasets.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   "FDPC"  (4 bytes)
//! u32     version (currently 1)
//! u32     rows
//! u32     d_x
//! u32     K
//! per record:
//!     d_x f64   features
//!     K   f64   soft label
//!     u32       decoded label
//! ```
//!
//! The round trip is bit-exact on the f64 payload.

use crate::data::{SyntheticDataset, SyntheticRecord};
use crate::error::{Error, Result};
use ndarray::Array1;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"FDPC";
const VERSION: u32 = 1;

/// Writes a synthetic dataset (decoded labels required) atomically.
pub fn write_binary_synthetic(ds: &SyntheticDataset, path: impl AsRef<Path>) -> Result<()> {
    let labels = ds
        .decoded_labels
        .as_ref()
        .ok_or_else(|| Error::Config("binary format requires decoded labels".into()))?;
    if labels.len() != ds.records.len() {
        return Err(Error::Contract("decoded label count mismatch".into()));
    }
    let (d_x, k) = match ds.records.first() {
        Some(r) => (r.features.len(), r.soft_label.len()),
        None => (0, 0),
    };
    for (i, r) in ds.records.iter().enumerate() {
        if r.features.len() != d_x || r.soft_label.len() != k {
            return Err(Error::Contract(format!("record {i} has inconsistent dimensions")));
        }
    }

    super::csv_io::write_atomic(path.as_ref(), |out| {
        out.write_all(MAGIC)?;
        for header in [VERSION, ds.records.len() as u32, d_x as u32, k as u32] {
            out.write_all(&header.to_le_bytes())?;
        }
        for (record, &label) in ds.records.iter().zip(labels) {
            for v in record.features.iter().chain(record.soft_label.iter()) {
                out.write_all(&v.to_le_bytes())?;
            }
            out.write_all(&(label as u32).to_le_bytes())?;
        }
        Ok(())
    })
}

/// Reads a file produced by [`write_binary_synthetic`].
pub fn read_binary_synthetic(path: impl AsRef<Path>) -> Result<SyntheticDataset> {
    let bytes = std::fs::read(path.as_ref())?;
    let mut cursor = Cursor { bytes: &bytes, pos: 0 };

    let magic = cursor.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic at byte offset 0: expected {MAGIC:?}, got {magic:?}"
        )));
    }
    let version = cursor.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} at byte offset 4 (expected {VERSION})"
        )));
    }
    let rows = cursor.u32("row count")? as usize;
    let d_x = cursor.u32("feature dimension")? as usize;
    let k = cursor.u32("class count")? as usize;

    let mut records = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let features: Array1<f64> = (0..d_x)
            .map(|_| cursor.f64("feature"))
            .collect::<Result<Vec<_>>>()?
            .into();
        let soft_label: Array1<f64> = (0..k)
            .map(|_| cursor.f64("soft label"))
            .collect::<Result<Vec<_>>>()?
            .into();
        labels.push(cursor.u32("decoded label")? as usize);
        records.push(SyntheticRecord { features, soft_label });
    }
    SyntheticDataset::new(records, Some(labels))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if self.bytes.len() < end {
            return Err(Error::Format(format!(
                "truncated file: {what} needs bytes {}..{end} but file has {} bytes",
                self.pos,
                self.bytes.len()
            )));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}
