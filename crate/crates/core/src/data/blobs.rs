//! Synthetic Gaussian-blob generator for desk-scale experiments.

use crate::data::Dataset;
use crate::error::{Error, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generates `K` isotropic Gaussian clusters with centers drawn uniformly in
/// `[-center_scale, center_scale]^d_x`. Pure function of its arguments: the
/// same seed always produces the same dataset. Samples are emitted grouped by
/// class (`per_class` rows of class 0, then class 1, ...).
pub fn make_blobs(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    cluster_spread: f64,
    center_scale: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::Config("make_blobs counts must be positive".into()));
    }
    if !(cluster_spread >= 0.0) || !(center_scale > 0.0) {
        return Err(Error::Config(
            "make_blobs needs cluster_spread >= 0 and center_scale > 0".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..dim).map(|_| rng.random_range(-center_scale..=center_scale)).collect())
        .collect();

    let n = num_classes * per_class;
    let mut features = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (k, center) in centers.iter().enumerate() {
        for i in 0..per_class {
            let row = k * per_class + i;
            for (j, &c) in center.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                features[[row, j]] = c + cluster_spread * z;
            }
            labels.push(k);
        }
    }
    Dataset::new(features, labels, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_means_same_dataset() {
        let a = make_blobs(3, 10, 4, 0.5, 5.0, 7).unwrap();
        let b = make_blobs(3, 10, 4, 0.5, 5.0, 7).unwrap();
        assert_eq!(a, b);
        let c = make_blobs(3, 10, 4, 0.5, 5.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_spread_collapses_each_class_onto_its_center() {
        let ds = make_blobs(2, 5, 3, 0.0, 5.0, 1).unwrap();
        for k in 0..2 {
            let first = ds.features.row(k * 5).to_owned();
            for i in 0..5 {
                assert_eq!(ds.features.row(k * 5 + i), first);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_blobs(0, 5, 3, 0.5, 5.0, 1).is_err());
        assert!(make_blobs(2, 5, 3, -0.5, 5.0, 1).is_err());
        assert!(make_blobs(2, 5, 3, 0.5, 0.0, 1).is_err());
    }
}
