//! Utility evaluation: train the softmax probe on synthetic data, score it on
//! held-out real data, compare against the real-data baseline, and sweep
//! parameter grids into CSV.
//!
//! Evaluation protocol: the real test partition is preprocessed with
//! statistics fitted on the real training partition (never on test data), so
//! synthetic-trained and real-trained models are scored in the same space.

mod classifier;
mod sweep;

pub use classifier::{evaluate_accuracy, predict, train_softmax, ClassifierWeights, TrainConfig};
pub use sweep::{sweep, SweepConfig, SweepGrid, SweepOutcome};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::{run_pipeline, RunConfig};
use crate::preprocess::{clip_l2, zscore_apply, zscore_fit};
use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Salt so the split shuffle does not collide with other uses of a seed.
const SPLIT_SALT: u64 = 0x5eed_0da7_a5b1_17e3;

/// One evaluated run with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub baseline_accuracy: Option<f64>,
    pub utility_ratio: Option<f64>,
    pub mode: String,
    pub mixture_order: usize,
    pub num_clients: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// Ratio of synthetic-trained to real-trained accuracy.
pub fn utility_ratio(acc_synthetic: f64, acc_real: f64) -> Result<f64> {
    if acc_real == 0.0 {
        return Err(Error::Numeric("utility ratio undefined: baseline accuracy is zero".into()));
    }
    Ok(acc_synthetic / acc_real)
}

/// Shuffled train/test split; deterministic in `seed`.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.len();
    let test_len = ((n as f64) * test_fraction).round() as usize;
    if test_len == 0 || test_len >= n {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} leaves an empty partition for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT);
    order.shuffle(&mut rng);

    let pick = |rows: &[usize]| -> Result<Dataset> {
        Dataset::new(
            ds.features.select(Axis(0), rows),
            rows.iter().map(|&r| ds.labels[r]).collect(),
            ds.num_classes,
        )
    };
    let test = pick(&order[..test_len])?;
    let train = pick(&order[test_len..])?;
    Ok((train, test))
}

/// Preprocesses an evaluation set with statistics fitted on the real
/// training partition (never on the set itself), then clips to `c`.
pub fn preprocess_with_train_stats(train: &Dataset, test: &Dataset, clip: f64) -> Result<Dataset> {
    let stats = zscore_fit(&train.features)?;
    let normalized = zscore_apply(&test.features, &stats)?;
    let mut clipped = normalized;
    for mut row in clipped.rows_mut() {
        let new = clip_l2(row.view(), clip)?;
        row.assign(&new);
    }
    Dataset::new(clipped, test.labels.clone(), test.num_classes)
}

/// Splits off a test partition and preprocesses it with statistics fitted on
/// the training partition, clipped to `c`. Returns `(train_raw, test_ready)`.
pub fn prepare_split(ds: &Dataset, test_fraction: f64, clip: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = train_test_split(ds, test_fraction, seed)?;
    let test_ready = preprocess_with_train_stats(&train, &test, clip)?;
    Ok((train, test_ready))
}

/// Accuracy of the real-data baseline: preprocess the training partition
/// with its own statistics, train, score on the prepared test partition.
pub fn baseline_accuracy(
    train_raw: &Dataset,
    test_ready: &Dataset,
    clip: f64,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let preprocessed = crate::preprocess::preprocess_client(train_raw, clip)?;
    let weights = train_softmax(&preprocessed, train_cfg)?;
    evaluate_accuracy(&weights, test_ready)
}

/// Runs the generation pipeline on `train_raw`, trains the probe on the
/// released synthetic dataset, and scores it on the prepared test partition.
pub fn run_and_score(
    train_raw: &Dataset,
    test_ready: &Dataset,
    run: &RunConfig,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let (released, _) = run_pipeline(train_raw, run)?;
    let synthetic = released.to_dataset(train_raw.num_classes)?;
    let weights = train_softmax(&synthetic, train_cfg)?;
    evaluate_accuracy(&weights, test_ready)
}
