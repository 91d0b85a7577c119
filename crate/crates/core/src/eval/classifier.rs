//! Multinomial softmax regression, trained with mini-batch gradient descent
//! on cross-entropy. Deliberately small: a deterministic, dependency-free
//! probe of how much class structure a (synthetic) training set retains.

use crate::data::Dataset;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Softmax weights, `K x (d_x + 1)` with the bias in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierWeights {
    pub matrix: Array2<f64>,
}

impl ClassifierWeights {
    /// Feature dimension the weights expect (bias excluded).
    pub fn input_dim(&self) -> usize {
        self.matrix.ncols() - 1
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Training hyperparameters. The defaults are stable on z-scored, clipped
/// features.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, learning_rate: 0.05, batch_size: 128, seed: 0 }
    }
}

/// Appends a constant-1 bias column.
fn augment(features: &Array2<f64>) -> Array2<f64> {
    let (n, d) = features.dim();
    let mut out = Array2::ones((n, d + 1));
    out.slice_mut(ndarray::s![.., ..d]).assign(features);
    out
}

/// Row-wise softmax of `logits`, in place, with max-subtraction for
/// stability.
fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Mean cross-entropy and its gradient on one batch.
/// Gradient: `(P - Y)^T X / B`, the analytic derivative of softmax
/// cross-entropy with respect to the weight matrix.
fn loss_and_gradient(
    weights: &Array2<f64>,
    batch: &Array2<f64>,
    labels: &[usize],
) -> (f64, Array2<f64>) {
    let n = batch.nrows() as f64;
    let mut probs = batch.dot(&weights.t());
    softmax_rows(&mut probs);

    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        loss -= probs[[i, label]].max(1e-300).ln();
    }
    loss /= n;

    // P - Y, reusing the probability buffer.
    for (i, &label) in labels.iter().enumerate() {
        probs[[i, label]] -= 1.0;
    }
    let grad = probs.t().dot(batch) / n;
    (loss, grad)
}

/// Mean cross-entropy of `weights` over a whole (augmented) set.
#[cfg(test)]
fn full_loss(weights: &Array2<f64>, augmented: &Array2<f64>, labels: &[usize]) -> f64 {
    loss_and_gradient(weights, augmented, labels).0
}

/// Trains softmax regression from zero-initialized weights. Deterministic in
/// `cfg.seed`: the mini-batch order is the only randomness.
pub fn train_softmax(train: &Dataset, cfg: &TrainConfig) -> Result<ClassifierWeights> {
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut present = vec![false; train.num_classes];
    for &label in &train.labels {
        present[label] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Config(
            "training set is degenerate: fewer than two classes present".into(),
        ));
    }

    let augmented = augment(&train.features);
    let mut weights = Array2::<f64>::zeros((train.num_classes, augmented.ncols()));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = augmented.select(Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (_, grad) = loss_and_gradient(&weights, &batch, &labels);
            weights.scaled_add(-cfg.learning_rate, &grad);
        }
    }
    Ok(ClassifierWeights { matrix: weights })
}

/// Class prediction for one (unaugmented) feature row; argmax with ties
/// resolved to the lowest index, matching the label decoder.
pub fn predict(weights: &ClassifierWeights, features: &Array1<f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, row) in weights.matrix.rows().into_iter().enumerate() {
        let bias = row[row.len() - 1];
        let score = row.slice(ndarray::s![..row.len() - 1]).dot(features) + bias;
        if score > best_score {
            best_score = score;
            best = k;
        }
    }
    best
}

/// Fraction of test rows whose predicted class matches the label.
pub fn evaluate_accuracy(weights: &ClassifierWeights, test: &Dataset) -> Result<f64> {
    if test.dim() != weights.input_dim() {
        return Err(Error::Config(format!(
            "test dimension {} does not match classifier input dimension {}",
            test.dim(),
            weights.input_dim()
        )));
    }
    if test.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    let hits = test
        .features
        .rows()
        .into_iter()
        .zip(&test.labels)
        .filter(|(row, label)| predict(weights, &row.to_owned()) == **label)
        .count();
    Ok(hits as f64 / test.len() as f64)
}
