//! Dataset types and external data formats.
//!
//! A [`Dataset`] is a dense feature matrix with integer class labels; a
//! [`SyntheticDataset`] is a list of mixed records carrying soft (real-valued)
//! label vectors plus optionally decoded hard labels. Readers reject malformed
//! input outright: no partially-populated dataset is ever returned.

mod binary;
mod blobs;
mod csv_io;
mod idx;

pub use binary::{read_binary_synthetic, write_binary_synthetic};
pub use blobs::make_blobs;
pub use csv_io::{
    read_csv_dataset, write_csv_dataset, write_csv_rows_atomic, write_synthetic_csv,
    write_text_atomic,
};
pub use idx::{read_idx_images, read_idx_labels};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// A labeled dataset: `N x d_x` features with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major feature matrix, one sample per row.
    pub features: Array2<f64>,
    /// Class label per row, each in `0..num_classes`.
    pub labels: Vec<usize>,
    /// Number of classes `K`.
    pub num_classes: usize,
}

impl Dataset {
    /// Builds a dataset after checking the shape/label invariants.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Config(format!(
                "feature rows ({}) and label count ({}) differ",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Config("feature dimension must be at least 1".into()));
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::Config(format!(
                "label {label} at row {row} is out of range for {num_classes} classes"
            )));
        }
        Ok(Self { features, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension `d_x`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Row indices grouped by class; `result[k]` lists the rows of class `k`.
    pub fn class_index(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.num_classes];
        for (row, &label) in self.labels.iter().enumerate() {
            index[label].push(row);
        }
        index
    }
}

/// One synthetic record: a mixed feature vector plus a soft label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub features: Array1<f64>,
    pub soft_label: Array1<f64>,
}

/// A released (or in-flight) synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<SyntheticRecord>,
    /// Hard labels decoded from the soft labels, when available.
    pub decoded_labels: Option<Vec<usize>>,
}

impl SyntheticDataset {
    pub fn new(records: Vec<SyntheticRecord>, decoded_labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(labels) = &decoded_labels {
            if labels.len() != records.len() {
                return Err(Error::Config(format!(
                    "decoded label count ({}) does not match record count ({})",
                    labels.len(),
                    records.len()
                )));
            }
        }
        Ok(Self { records, decoded_labels })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Converts to a hard-labeled [`Dataset`] for classifier training.
    /// Requires decoded labels.
    pub fn to_dataset(&self, num_classes: usize) -> Result<Dataset> {
        let labels = self
            .decoded_labels
            .clone()
            .ok_or_else(|| Error::Config("synthetic dataset has no decoded labels".into()))?;
        let dim = self.records.first().map(|r| r.features.len()).unwrap_or(0);
        let mut features = Array2::zeros((self.records.len(), dim));
        for (i, record) in self.records.iter().enumerate() {
            features.row_mut(i).assign(&record.features);
        }
        Dataset::new(features, labels, num_classes)
    }
}
