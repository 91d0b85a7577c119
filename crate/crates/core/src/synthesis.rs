//! Per-client synthetic record generation.
//!
//! Each client walks slots `t = 0..T_s`, targets class `t mod K`, averages
//! `l` randomly chosen same-class samples (features and one-hot labels), and
//! adds its correlated slice plus fresh local Gaussian noise. Every random
//! choice is keyed by `(client, t, role)`, so clients and slots can run in
//! any parallel order without changing a single bit of output.

use crate::accountant::NoiseScales;
use crate::data::{Dataset, SyntheticRecord};
use crate::error::{Error, Result};
use crate::noise::{draw_gaussian, Party, StreamKey, StreamRole};
use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// One client's preprocessed shard with rows grouped by class.
#[derive(Debug, Clone)]
pub struct ClientShard {
    pub client_id: u32,
    pub data: Dataset,
    /// `class_index[k]` lists the shard rows holding class `k`.
    pub class_index: Vec<Vec<usize>>,
}

impl ClientShard {
    pub fn new(client_id: u32, data: Dataset) -> Self {
        let class_index = data.class_index();
        ClientShard { client_id, data, class_index }
    }
}

/// Generation settings shared by every client in a run.
#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    /// Order of mixture `l`.
    pub mixture_order: usize,
    /// Synthetic records per client `T_s`; the class count must divide it.
    pub records_per_client: usize,
    pub num_classes: usize,
    /// Per-client noise scales (local and correlated components).
    pub scales: NoiseScales,
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mixture_order == 0 {
            return Err(Error::Config("mixture order must be positive".into()));
        }
        if self.num_classes == 0 || self.records_per_client == 0 {
            return Err(Error::Config("record and class counts must be positive".into()));
        }
        if self.records_per_client % self.num_classes != 0 {
            return Err(Error::Config(format!(
                "class count {} must divide records per client {}",
                self.num_classes, self.records_per_client
            )));
        }
        Ok(())
    }
}

/// Correlated noise slices for one client, indexed by slot.
#[derive(Debug, Clone)]
pub struct CorrelatedSlices {
    pub features: Vec<Array1<f64>>,
    pub labels: Vec<Array1<f64>>,
}

impl CorrelatedSlices {
    /// All-zero slices for noise-free or single-component runs.
    pub fn zeros(slots: usize, dim: usize, num_classes: usize) -> Self {
        CorrelatedSlices {
            features: vec![Array1::zeros(dim); slots],
            labels: vec![Array1::zeros(num_classes); slots],
        }
    }
}

/// Splits a dataset into `S` disjoint equal-size shards, uniformly at random
/// under the partition stream of `master_seed`.
pub fn partition_dataset(ds: &Dataset, num_clients: usize, master_seed: u64) -> Result<Vec<Dataset>> {
    if num_clients == 0 {
        return Err(Error::Config("need at least one client".into()));
    }
    if ds.len() % num_clients != 0 {
        return Err(Error::Config(format!(
            "client count {} must divide dataset size {}",
            num_clients,
            ds.len()
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = StreamKey::new(master_seed, Party::Server, 0, StreamRole::Partition).rng();
    order.shuffle(&mut rng);

    let shard_size = ds.len() / num_clients;
    order
        .chunks_exact(shard_size)
        .map(|rows| {
            let features = ds.features.select(ndarray::Axis(0), rows);
            let labels = rows.iter().map(|&r| ds.labels[r]).collect();
            Dataset::new(features, labels, ds.num_classes)
        })
        .collect()
}

/// Mixes one noiseless record for class `k`: the arithmetic mean of `l`
/// randomly selected class-`k` rows and of their one-hot labels. Selection is
/// without replacement when the class has at least `l` members, with
/// replacement otherwise.
pub fn mix_once(
    shard: &ClientShard,
    class: usize,
    mixture_order: usize,
    key: StreamKey,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let rows = shard
        .class_index
        .get(class)
        .filter(|rows| !rows.is_empty())
        .ok_or_else(|| {
            Error::Config(format!(
                "client {} has no samples of class {class}",
                shard.client_id
            ))
        })?;

    let mut rng = key.rng();
    let l = mixture_order;
    let chosen: Vec<usize> = if rows.len() >= l {
        rand::seq::index::sample(&mut rng, rows.len(), l).iter().map(|i| rows[i]).collect()
    } else {
        (0..l).map(|_| rows[rng.random_range(0..rows.len())]).collect()
    };

    let mut features = Array1::<f64>::zeros(shard.data.dim());
    let mut soft_label = Array1::<f64>::zeros(shard.data.num_classes);
    for &row in &chosen {
        features += &shard.data.features.row(row);
        soft_label[shard.data.labels[row]] += 1.0;
    }
    features /= l as f64;
    soft_label /= l as f64;
    Ok((features, soft_label))
}

/// Generates this client's `T_s` noisy records. Slot `t` targets class
/// `t mod K`; output order is slot-major and independent of thread count.
pub fn synthesize_local(
    shard: &ClientShard,
    cfg: &SynthesisConfig,
    correlated: &CorrelatedSlices,
    master_seed: u64,
) -> Result<Vec<SyntheticRecord>> {
    cfg.validate()?;
    if correlated.features.len() < cfg.records_per_client
        || correlated.labels.len() < cfg.records_per_client
    {
        return Err(Error::Contract(format!(
            "client {}: correlated slices cover {} feature / {} label slots but {} are needed",
            shard.client_id,
            correlated.features.len(),
            correlated.labels.len(),
            cfg.records_per_client
        )));
    }

    let dim = shard.data.dim();
    (0..cfg.records_per_client)
        .into_par_iter()
        .map(|t| {
            let class = t % cfg.num_classes;
            let party = Party::Client(shard.client_id);
            let mix_key = StreamKey::new(master_seed, party, t as u64, StreamRole::MixSelect);
            let (mut features, mut soft_label) = mix_once(shard, class, cfg.mixture_order, mix_key)?;

            let feature_key = StreamKey::new(master_seed, party, t as u64, StreamRole::FeatureLocal);
            let label_key = StreamKey::new(master_seed, party, t as u64, StreamRole::LabelLocal);
            features += &correlated.features[t];
            features += &draw_gaussian(feature_key, dim, cfg.scales.tau_g)?;
            soft_label += &correlated.labels[t];
            soft_label += &draw_gaussian(label_key, cfg.num_classes, cfg.scales.tau_g)?;
            Ok(SyntheticRecord { features, soft_label })
        })
        .collect()
}
