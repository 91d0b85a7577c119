//! Run orchestration: wires accounting, noise dealing, per-client synthesis
//! and server-side aggregation into one deterministic pipeline.
//!
//! Four modes share the machinery. `NonPrivate` disables noise. `Centralized`
//! is a single in-process holder of the whole dataset. The two federated
//! modes differ only in how the per-client noise is composed: conventional
//! clients add all of it independently, CAPE clients split it into a
//! correlated zero-sum part (cancelled by aggregation) and an independent
//! remainder.

use crate::accountant::{
    calibrate_tau, cape_split, conventional_local_tau, total_epsilon, AccountingReport,
    NoiseScales, PrivacyParams,
};
use crate::data::{Dataset, SyntheticDataset, SyntheticRecord};
use crate::error::{Error, Result};
use crate::noise::{draw_zero_sum, StreamRole};
use crate::preprocess::preprocess_client;
use crate::synthesis::{
    partition_dataset, synthesize_local, ClientShard, CorrelatedSlices, SynthesisConfig,
};
use ndarray::Array1;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Pipeline operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    NonPrivate,
    Centralized,
    FedConventional,
    FedCape,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::NonPrivate => "non-private",
            Mode::Centralized => "centralized",
            Mode::FedConventional => "fed-conventional",
            Mode::FedCape => "fed-cape",
        };
        f.write_str(name)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-private" => Ok(Mode::NonPrivate),
            "centralized" => Ok(Mode::Centralized),
            "fed-conventional" => Ok(Mode::FedConventional),
            "fed-cape" => Ok(Mode::FedCape),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; expected non-private, centralized, fed-conventional or fed-cape"
            ))),
        }
    }
}

/// Full configuration of one generation run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub privacy: PrivacyParams,
    pub master_seed: u64,
    /// Explicit central noise scale; set to skip calibration.
    pub tau_override: Option<f64>,
}

/// Per-client noise scales for a mode, given the centrally calibrated scale.
///
/// Invariants maintained across modes (for `S` clients averaging per slot):
/// the slot-aggregate noise variance is `tau_central^2` in CAPE mode, equal
/// to the centralized release, and `S * tau_central^2` in conventional mode;
/// each client's total marginal noise variance (correlated plus local) is
/// `S^2 * tau_central^2` in both federated modes, so the two are
/// indistinguishable from a single client's perspective.
pub fn mode_scales(mode: Mode, tau_central: f64, num_clients: usize) -> NoiseScales {
    match mode {
        Mode::NonPrivate => NoiseScales::ZERO,
        Mode::Centralized => NoiseScales { tau_g: tau_central, tau_e: 0.0 },
        Mode::FedConventional => NoiseScales {
            tau_g: conventional_local_tau(conventional_local_tau(tau_central, num_clients), num_clients),
            tau_e: 0.0,
        },
        Mode::FedCape => cape_split(conventional_local_tau(tau_central, num_clients), num_clients),
    }
}

/// Coordinate-wise mean of the `S` per-client records for one slot.
pub fn aggregate_slot(records: &[&SyntheticRecord]) -> Result<SyntheticRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::Contract("aggregate_slot called with no records".into()))?;
    let dim = first.features.len();
    let k = first.soft_label.len();
    let mut features = Array1::<f64>::zeros(dim);
    let mut soft_label = Array1::<f64>::zeros(k);
    for (client, record) in records.iter().enumerate() {
        if record.features.len() != dim || record.soft_label.len() != k {
            return Err(Error::Contract(format!(
                "client {client} record has dimensions {}x{}, expected {dim}x{k}",
                record.features.len(),
                record.soft_label.len()
            )));
        }
        features += &record.features;
        soft_label += &record.soft_label;
    }
    let s = records.len() as f64;
    features /= s;
    soft_label /= s;
    Ok(SyntheticRecord { features, soft_label })
}

/// Index of the largest soft-label entry; ties go to the lowest index.
pub fn decode_label(soft: &Array1<f64>) -> Result<usize> {
    if soft.is_empty() {
        return Err(Error::Contract("cannot decode an empty soft label".into()));
    }
    if soft.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in soft label".into()));
    }
    let mut best = 0;
    for (i, &v) in soft.iter().enumerate() {
        if v > soft[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Deals the correlated slices for every slot, transposed to per-client
/// views. All-zero slices (no dealer traffic) when `tau_e` is zero.
pub fn deal_correlated_slices(
    master_seed: u64,
    slots: usize,
    num_clients: usize,
    dim: usize,
    num_classes: usize,
    tau_e: f64,
) -> Result<Vec<CorrelatedSlices>> {
    if tau_e == 0.0 {
        return Ok(vec![CorrelatedSlices::zeros(slots, dim, num_classes); num_clients]);
    }
    let per_slot: Vec<(Vec<Array1<f64>>, Vec<Array1<f64>>)> = (0..slots)
        .into_par_iter()
        .map(|t| {
            let features = draw_zero_sum(
                master_seed,
                t as u64,
                StreamRole::FeatureCorrelated,
                num_clients,
                dim,
                tau_e,
            )?;
            let labels = draw_zero_sum(
                master_seed,
                t as u64,
                StreamRole::LabelCorrelated,
                num_clients,
                num_classes,
                tau_e,
            )?;
            Ok((features, labels))
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<CorrelatedSlices> = (0..num_clients)
        .map(|_| CorrelatedSlices {
            features: Vec::with_capacity(slots),
            labels: Vec::with_capacity(slots),
        })
        .collect();
    for (features, labels) in per_slot {
        for (client, (f, l)) in features.into_iter().zip(labels).enumerate() {
            out[client].features.push(f);
            out[client].labels.push(l);
        }
    }
    Ok(out)
}

/// Runs the whole pipeline: calibrate (or take) the central noise scale,
/// partition, preprocess, synthesize at every client, aggregate each slot and
/// decode labels. Output is a pure function of `(ds, cfg)`.
pub fn run_pipeline(ds: &Dataset, cfg: &RunConfig) -> Result<(SyntheticDataset, AccountingReport)> {
    let mode = cfg.mode;
    let with_mode = |e: Error| match e {
        Error::Contract(m) => Error::Contract(format!("mode {mode}: {m}")),
        Error::Config(m) => Error::Config(format!("mode {mode}: {m}")),
        other => other,
    };

    if cfg.privacy.dataset_size != ds.len() {
        return Err(Error::Config(format!(
            "configured dataset size {} does not match actual size {}",
            cfg.privacy.dataset_size,
            ds.len()
        )));
    }
    if cfg.privacy.num_classes != ds.num_classes {
        return Err(Error::Config(format!(
            "configured class count {} does not match dataset classes {}",
            cfg.privacy.num_classes, ds.num_classes
        )));
    }

    let mut privacy = cfg.privacy.clone();
    if mode == Mode::Centralized {
        privacy.num_clients = 1;
    }
    let num_clients = privacy.num_clients;
    privacy.validate().map_err(with_mode)?;

    let (tau_central, mut report) = match (mode, cfg.tau_override) {
        (Mode::NonPrivate, _) => {
            (0.0, AccountingReport::non_private(privacy.delta, privacy.releases))
        }
        (_, Some(tau)) if tau == 0.0 => {
            (0.0, AccountingReport::non_private(privacy.delta, privacy.releases))
        }
        (_, Some(tau)) => (tau, total_epsilon(&privacy, tau).map_err(with_mode)?),
        (_, None) if privacy.epsilon_target.is_infinite() => {
            (0.0, AccountingReport::non_private(privacy.delta, privacy.releases))
        }
        (_, None) => {
            let (_, report) = calibrate_tau(&privacy).map_err(with_mode)?;
            (report.tau_g, report)
        }
    };
    let scales = mode_scales(mode, tau_central, num_clients);
    report.tau_e = scales.tau_e;

    let shards = partition_dataset(ds, num_clients, cfg.master_seed).map_err(with_mode)?;
    let shards: Vec<ClientShard> = shards
        .into_par_iter()
        .enumerate()
        .map(|(id, shard)| {
            preprocess_client(&shard, privacy.clip)
                .map(|pre| ClientShard::new(id as u32, pre))
                .map_err(|e| Error::Config(format!("mode {mode}: client {id}: {e}")))
        })
        .collect::<Result<_>>()?;

    let slots = privacy.releases;
    let correlated = deal_correlated_slices(
        cfg.master_seed,
        slots,
        num_clients,
        ds.dim(),
        ds.num_classes,
        scales.tau_e,
    )
    .map_err(with_mode)?;

    let syn_cfg = SynthesisConfig {
        mixture_order: privacy.mixture_order,
        records_per_client: slots,
        num_classes: ds.num_classes,
        scales,
    };
    let per_client: Vec<Vec<SyntheticRecord>> = shards
        .par_iter()
        .zip(correlated.par_iter())
        .map(|(shard, corr)| synthesize_local(shard, &syn_cfg, corr, cfg.master_seed).map_err(with_mode))
        .collect::<Result<_>>()?;

    for (client, records) in per_client.iter().enumerate() {
        if records.len() != slots {
            return Err(Error::Contract(format!(
                "mode {mode}: client {client} produced {} records, expected {slots}",
                records.len()
            )));
        }
    }

    let records: Vec<SyntheticRecord> = (0..slots)
        .into_par_iter()
        .map(|t| {
            let slot: Vec<&SyntheticRecord> = per_client.iter().map(|recs| &recs[t]).collect();
            aggregate_slot(&slot)
                .map_err(|e| Error::Contract(format!("mode {mode}: slot {t}: {e}")))
        })
        .collect::<Result<_>>()?;
    let decoded = records
        .iter()
        .enumerate()
        .map(|(t, r)| {
            decode_label(&r.soft_label)
                .map_err(|e| Error::Numeric(format!("mode {mode}: slot {t}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let released = SyntheticDataset::new(records, Some(decoded))?;
    Ok((released, report))
}
