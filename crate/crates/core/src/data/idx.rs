//! IDX file readers (the MNIST/FashionMNIST container format).
//!
//! IDX is big-endian: a 4-byte magic, one 4-byte count per dimension, then
//! the payload. Images use magic `0x00000803` (u8 data, 3 dims), labels
//! `0x00000801`. Multi-dimensional payloads are flattened row-major, so a
//! `N x r x c` image file becomes an `N x (r*c)` matrix. Pixel bytes are kept
//! on their raw `[0, 255]` scale; any rescaling is the preprocessing stage's
//! job.

use crate::error::{Error, Result};
use ndarray::Array2;
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Format(format!(
            "truncated IDX file: {what} needs bytes {offset}..{end} but file has {} bytes",
            bytes.len()
        )));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Reads an IDX image file into an `N x d` matrix of reals in `[0, 255]`.
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path.as_ref())?;
    let magic = read_be_u32(&bytes, 0, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic at byte offset 0: expected 0x{IMAGE_MAGIC:08x}, got 0x{magic:08x}"
        )));
    }
    let rows = read_be_u32(&bytes, 4, "item count")? as usize;
    // Magic byte 3 encodes the dimension count; byte 0x03 means two more dims.
    let ndims = (magic & 0xff) as usize;
    let mut dim = 1usize;
    for d in 1..ndims {
        let offset = 4 + 4 * d;
        let extent = read_be_u32(&bytes, offset, "dimension")? as usize;
        dim = dim.checked_mul(extent).ok_or_else(|| {
            Error::Format(format!("dimension overflow at byte offset {offset}"))
        })?;
    }
    let header = 4 + 4 * ndims;
    let payload = rows.checked_mul(dim).ok_or_else(|| {
        Error::Format(format!("dimension overflow at byte offset {header}: {rows} x {dim}"))
    })?;
    let expected = header + payload;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "truncated IDX image file at byte offset {}: header promises {expected} bytes",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes[header..expected].iter().map(|&b| f64::from(b)).collect();
    Array2::from_shape_vec((rows, dim), data)
        .map_err(|e| Error::Contract(format!("idx shape construction failed: {e}")))
}

/// Reads an IDX label file into one integer per record.
pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let bytes = std::fs::read(path.as_ref())?;
    let magic = read_be_u32(&bytes, 0, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic at byte offset 0: expected 0x{LABEL_MAGIC:08x}, got 0x{magic:08x}"
        )));
    }
    let count = read_be_u32(&bytes, 4, "label count")? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "truncated IDX label file at byte offset {}: {count} labels need {expected} bytes",
            bytes.len()
        )));
    }
    Ok(bytes[8..expected].iter().map(|&b| b as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn reads_minimal_image_file() {
        // 1 item of 2x2 pixels: [0, 1, 2, 3].
        let bytes = [
            0x00, 0x00, 0x08, 0x03, // magic
            0x00, 0x00, 0x00, 0x01, // 1 item
            0x00, 0x00, 0x00, 0x02, // 2 rows
            0x00, 0x00, 0x00, 0x02, // 2 cols
            0x00, 0x01, 0x02, 0x03,
        ];
        let f = write_temp(&bytes);
        let m = read_idx_images(f.path()).unwrap();
        assert_eq!(m.shape(), &[1, 4]);
        assert_eq!(m.row(0).to_vec(), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_file_is_a_format_error() {
        let f = write_temp(&[]);
        let err = read_idx_images(f.path()).unwrap_err();
        assert_eq!(err.category(), "format");
    }

    #[test]
    fn wrong_magic_names_the_offset() {
        let bytes = [0x00, 0x00, 0x08, 0x01, 0, 0, 0, 0];
        let f = write_temp(&bytes);
        let err = read_idx_images(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("offset 0"), "message should name the offset: {msg}");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let bytes = [
            0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, // 2 items
            0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x02, // 1x2 each
            0x05, 0x06, 0x07, // one byte short
        ];
        let f = write_temp(&bytes);
        assert!(read_idx_images(f.path()).is_err());
    }

    #[test]
    fn reads_labels() {
        let bytes = [0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 0x03, 0x07];
        let f = write_temp(&bytes);
        assert_eq!(read_idx_labels(f.path()).unwrap(), vec![3, 7]);
    }

    #[test]
    fn label_reader_rejects_image_magic() {
        let bytes = [0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x00];
        let f = write_temp(&bytes);
        assert!(read_idx_labels(f.path()).is_err());
    }

    #[test]
    fn label_count_mismatch_is_rejected() {
        let bytes = [0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x03, 0x01, 0x02];
        let f = write_temp(&bytes);
        assert!(read_idx_labels(f.path()).is_err());
    }

    /// Shape contract against the real MNIST files; run with
    /// `MNIST_DIR=/path/to/mnist cargo test -- --ignored`.
    #[test]
    #[ignore]
    fn mnist_train_shapes() {
        let dir = std::env::var("MNIST_DIR").expect("set MNIST_DIR");
        let images = read_idx_images(format!("{dir}/train-images-idx3-ubyte")).unwrap();
        let labels = read_idx_labels(format!("{dir}/train-labels-idx1-ubyte")).unwrap();
        assert_eq!(images.shape(), &[60000, 784]);
        assert_eq!(labels.len(), 60000);
        assert!(labels.iter().all(|&l| l < 10));
    }
}
