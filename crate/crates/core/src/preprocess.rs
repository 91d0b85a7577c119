//! Per-client preprocessing: per-feature z-score normalization with local
//! statistics, then l2-norm clipping.
//!
//! The clipped row norm is what the accountant's feature sensitivity
//! `2c / l` rests on, so `preprocess_client` guarantees every output row has
//! `||x||_2 <= c`.

use crate::data::Dataset;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, Axis};

/// Guards division for constant columns: sigma below this maps the column to
/// zero instead of exploding.
const SIGMA_FLOOR: f64 = 1e-12;

/// Per-column means and population standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub means: Array1<f64>,
    pub stds: Array1<f64>,
}

/// Computes column means and population (divide-by-N) standard deviations.
pub fn zscore_fit(features: &Array2<f64>) -> Result<ColumnStats> {
    if features.nrows() == 0 {
        return Err(Error::Config("cannot fit statistics on an empty matrix".into()));
    }
    let n = features.nrows() as f64;
    let means = features.mean_axis(Axis(0)).expect("non-empty matrix");
    let mut vars = Array1::zeros(features.ncols());
    for row in features.rows() {
        for (j, &v) in row.iter().enumerate() {
            let d = v - means[j];
            vars[j] += d * d;
        }
    }
    let stds = vars.mapv(|v: f64| (v / n).sqrt());
    Ok(ColumnStats { means, stds })
}

/// Applies `(x - mu_j) / max(sigma_j, floor)` per column.
pub fn zscore_apply(features: &Array2<f64>, stats: &ColumnStats) -> Result<Array2<f64>> {
    if features.ncols() != stats.means.len() || features.ncols() != stats.stds.len() {
        return Err(Error::Config(format!(
            "feature dimension {} does not match statistics dimension {}",
            features.ncols(),
            stats.means.len()
        )));
    }
    let mut out = features.clone();
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - stats.means[j]) / stats.stds[j].max(SIGMA_FLOOR);
        }
    }
    Ok(out)
}

/// Scales `x` by `1 / max(1, ||x||_2 / c)`: the output norm is at most `c`
/// and the direction is preserved.
pub fn clip_l2(x: ArrayView1<'_, f64>, c: f64) -> Result<Array1<f64>> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("clipping threshold must be positive, got {c}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in clip input".into()));
    }
    let norm = x.dot(&x).sqrt();
    // Guard band of a few ulps: a vector already scaled onto the threshold
    // recomputes its norm up to one ulp above c, and must not be rescaled
    // again (clipping is idempotent bit-for-bit).
    let scale = if norm > c * (1.0 + 4.0 * f64::EPSILON) { c / norm } else { 1.0 };
    Ok(x.mapv(|v| v * scale))
}

/// Full client-side preprocessing: fit z-score statistics on the shard's own
/// data, apply them, then clip every row to norm `c`. Labels pass through.
pub fn preprocess_client(shard: &Dataset, c: f64) -> Result<Dataset> {
    if shard.is_empty() {
        return Err(Error::Config("cannot preprocess an empty shard".into()));
    }
    let stats = zscore_fit(&shard.features)?;
    let normalized = zscore_apply(&shard.features, &stats)?;
    let mut clipped = normalized;
    for mut row in clipped.rows_mut() {
        let new = clip_l2(row.view(), c)?;
        row.assign(&new);
    }
    Dataset::new(clipped, shard.labels.clone(), shard.num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn fit_on_two_points() {
        let stats = zscore_fit(&array![[0.0], [2.0]]).unwrap();
        assert_eq!(stats.means[0], 1.0);
        assert_eq!(stats.stds[0], 1.0);
    }

    #[test]
    fn constant_column_has_zero_std() {
        let stats = zscore_fit(&array![[5.0], [5.0], [5.0]]).unwrap();
        assert_eq!(stats.means[0], 5.0);
        assert_eq!(stats.stds[0], 0.0);
    }

    #[test]
    fn population_std_of_one_two_three() {
        // mean 2, squared deviations (1, 0, 1), population variance 2/3
        let stats = zscore_fit(&array![[1.0], [2.0], [3.0]]).unwrap();
        let expected = (2.0f64 / 3.0).sqrt();
        assert!((stats.stds[0] - expected).abs() < 1e-15);
        assert!((stats.stds[0] - 0.816_496_580_927_726).abs() < 1e-12);
    }

    #[test]
    fn apply_with_own_stats_standardizes() {
        let m = array![[0.0], [2.0]];
        let stats = zscore_fit(&m).unwrap();
        let z = zscore_apply(&m, &stats).unwrap();
        assert_eq!(z, array![[-1.0], [1.0]]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let m = array![[5.0], [5.0]];
        let stats = zscore_fit(&m).unwrap();
        let z = zscore_apply(&m, &stats).unwrap();
        assert_eq!(z, array![[0.0], [0.0]]);
    }

    #[test]
    fn identity_stats_leave_data_unchanged() {
        let m = array![[1.5, -2.0], [0.25, 4.0]];
        let stats = ColumnStats { means: array![0.0, 0.0], stds: array![1.0, 1.0] };
        assert_eq!(zscore_apply(&m, &stats).unwrap(), m);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let stats = ColumnStats { means: array![0.0], stds: array![1.0] };
        assert!(zscore_apply(&array![[1.0, 2.0]], &stats).is_err());
    }

    #[test]
    fn clip_scales_down_to_threshold() {
        let clipped = clip_l2(array![3.0, 4.0].view(), 1.0).unwrap();
        assert!((clipped[0] - 0.6).abs() < 1e-15);
        assert!((clipped[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn clip_leaves_short_vectors_alone() {
        let x = array![0.1, 0.1];
        assert_eq!(clip_l2(x.view(), 1.0).unwrap(), x);
        let zero = array![0.0, 0.0];
        assert_eq!(clip_l2(zero.view(), 1.0).unwrap(), zero);
    }

    #[test]
    fn clip_rejects_non_finite() {
        assert!(clip_l2(array![f64::NAN, 1.0].view(), 1.0).is_err());
        assert!(clip_l2(array![f64::INFINITY].view(), 1.0).is_err());
    }

    #[test]
    fn preprocessed_rows_stay_inside_the_ball() {
        let ds = crate::data::make_blobs(3, 20, 6, 1.5, 4.0, 3).unwrap();
        let out = preprocess_client(&ds, 1.0).unwrap();
        for row in out.features.rows() {
            assert!(row.dot(&row).sqrt() <= 1.0 + 1e-12);
        }
        assert_eq!(out.labels, ds.labels);
    }

    #[test]
    fn standardization_holds_after_fit_apply() {
        let ds = crate::data::make_blobs(2, 50, 4, 2.0, 3.0, 11).unwrap();
        let stats = zscore_fit(&ds.features).unwrap();
        let z = zscore_apply(&ds.features, &stats).unwrap();
        let post = zscore_fit(&z).unwrap();
        for j in 0..z.ncols() {
            assert!(post.means[j].abs() <= 1e-10);
            assert!((post.stds[j] - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn single_sample_shard_becomes_zero() {
        let ds = Dataset::new(array![[3.0, -1.0]], vec![0], 1).unwrap();
        let out = preprocess_client(&ds, 1.0).unwrap();
        assert_eq!(out.features, array![[0.0, 0.0]]);
    }

    #[test]
    fn preprocessing_is_idempotent_in_norm() {
        let ds = crate::data::make_blobs(2, 25, 5, 1.0, 4.0, 9).unwrap();
        let once = preprocess_client(&ds, 1.0).unwrap();
        for row in once.features.rows() {
            let again = clip_l2(row.view(), 1.0).unwrap();
            assert_eq!(again, row.to_owned());
        }
    }

    proptest! {
        #[test]
        fn clip_norm_never_exceeds_threshold(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..12),
            c in 1e-3f64..1e3,
        ) {
            let x = Array1::from(xs);
            let clipped = clip_l2(x.view(), c).unwrap();
            prop_assert!(clipped.dot(&clipped).sqrt() <= c * (1.0 + 1e-12));
        }

        #[test]
        fn clip_is_scale_invariant_above_threshold(
            xs in proptest::collection::vec(-100.0f64..100.0, 2..8),
            lambda in 1.0f64..50.0,
        ) {
            let x = Array1::from(xs);
            let c = 0.5;
            let norm = x.dot(&x).sqrt();
            prop_assume!(norm >= c);
            let a = clip_l2(x.view(), c).unwrap();
            let b = clip_l2(x.mapv(|v| v * lambda).view(), c).unwrap();
            for (u, v) in a.iter().zip(b.iter()) {
                prop_assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0));
            }
        }
    }
}
