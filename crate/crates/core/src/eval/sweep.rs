//! Parameter-grid sweep harness writing one CSV row per evaluated run.
//!
//! Rows are keyed by `(mode, l, S, epsilon, seed)`. Reruns skip keys already
//! present in the output file, so an interrupted sweep resumes where it
//! stopped; the file is rewritten atomically in canonical grid order after
//! every completed row. Per-point failures land in the `error` column and do
//! not abort the sweep.

use crate::accountant::PrivacyParams;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::{baseline_accuracy, prepare_split, run_and_score, utility_ratio, TrainConfig};
use crate::federation::{Mode, RunConfig};
use std::collections::BTreeMap;
use std::path::Path;

pub const SWEEP_HEADER: [&str; 9] =
    ["mode", "l", "S", "epsilon", "seed", "accuracy", "baseline", "utility_ratio", "error"];

/// Grid axes; the sweep visits their cartesian product.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub modes: Vec<Mode>,
    pub mixture_orders: Vec<usize>,
    pub client_counts: Vec<usize>,
    pub epsilons: Vec<f64>,
}

impl SweepGrid {
    fn validate(&self) -> Result<()> {
        if self.modes.is_empty()
            || self.mixture_orders.is_empty()
            || self.client_counts.is_empty()
            || self.epsilons.is_empty()
        {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(())
    }
}

/// Parameters shared by every grid point.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub delta: f64,
    pub clip: f64,
    /// Released records per run (`T`).
    pub releases: usize,
    pub alpha_max: usize,
    /// Fraction of the dataset held out as the real test partition.
    pub test_fraction: f64,
    pub train: TrainConfig,
}

/// What a sweep invocation did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOutcome {
    /// Rows in the final file.
    pub rows_total: usize,
    /// Rows newly computed by this invocation.
    pub rows_computed: usize,
}

/// Epsilon rendering shared by rows and keys; infinity spells `inf`.
pub fn format_epsilon(eps: f64) -> String {
    if eps.is_infinite() {
        "inf".into()
    } else {
        format!("{eps}")
    }
}

type RowKey = (String, String, String, String, String);

fn row_key(record: &[String]) -> RowKey {
    (
        record[0].clone(),
        record[1].clone(),
        record[2].clone(),
        record[3].clone(),
        record[4].clone(),
    )
}

fn read_existing(path: &Path) -> Result<Vec<Vec<String>>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("cannot open sweep csv: {e}")))?;
    let header = reader.headers().map_err(|e| Error::Parse(format!("sweep header: {e}")))?;
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(Error::Parse(format!(
            "existing sweep file has incompatible header {header:?}"
        )));
    }
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(|e| Error::Parse(format!("sweep row: {e}")))
        })
        .collect()
}

fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    crate::data::write_csv_rows_atomic(path, &SWEEP_HEADER, rows)
}

/// Runs the grid over every seed, resuming from `out` when it already has
/// rows. Returns row counts; the CSV on disk is the real product.
pub fn sweep(
    ds: &Dataset,
    grid: &SweepGrid,
    cfg: &SweepConfig,
    seeds: &[u64],
    out: &Path,
) -> Result<SweepOutcome> {
    grid.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }

    let existing_rows = read_existing(out)?;
    let mut by_key: BTreeMap<RowKey, Vec<String>> = BTreeMap::new();
    for row in existing_rows {
        if row.len() != SWEEP_HEADER.len() {
            return Err(Error::Parse(format!(
                "existing sweep row has {} fields, expected {}",
                row.len(),
                SWEEP_HEADER.len()
            )));
        }
        by_key.insert(row_key(&row), row);
    }

    // Split and baseline per seed, computed at most once and only when some
    // row actually needs them.
    let mut per_seed: BTreeMap<u64, SeedSetup> = BTreeMap::new();

    let mut ordered_keys: Vec<RowKey> = Vec::new();
    let mut computed = 0usize;
    for &mode in &grid.modes {
        for &l in &grid.mixture_orders {
            for &s in &grid.client_counts {
                for &eps in &grid.epsilons {
                    for &seed in seeds {
                        let key: RowKey = (
                            mode.to_string(),
                            l.to_string(),
                            s.to_string(),
                            format_epsilon(eps),
                            seed.to_string(),
                        );
                        ordered_keys.push(key.clone());
                        if by_key.contains_key(&key) {
                            continue;
                        }
                        let setup = seed_setup(&mut per_seed, ds, cfg, seed);
                        let row = compute_row(cfg, mode, l, s, eps, seed, setup);
                        by_key.insert(key, row);
                        computed += 1;

                        let snapshot = collect_ordered(&ordered_keys, &by_key);
                        write_rows(out, &snapshot)?;
                    }
                }
            }
        }
    }

    let rows = collect_ordered(&ordered_keys, &by_key);
    write_rows(out, &rows)?;
    Ok(SweepOutcome { rows_total: rows.len(), rows_computed: computed })
}

/// Grid rows in canonical order, then any stale rows from older grids.
fn collect_ordered(ordered_keys: &[RowKey], by_key: &BTreeMap<RowKey, Vec<String>>) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(by_key.len());
    let mut used: std::collections::BTreeSet<&RowKey> = std::collections::BTreeSet::new();
    for key in ordered_keys {
        if let Some(row) = by_key.get(key) {
            if used.insert(key) {
                rows.push(row.clone());
            }
        }
    }
    for (key, row) in by_key {
        if !used.contains(key) {
            rows.push(row.clone());
        }
    }
    rows
}

/// Train/test split plus baseline accuracy for one seed, or the failure that
/// prevented it.
type SeedSetup = Result<(Dataset, Dataset, f64)>;

fn seed_setup<'m>(
    cache: &'m mut BTreeMap<u64, SeedSetup>,
    ds: &Dataset,
    cfg: &SweepConfig,
    seed: u64,
) -> &'m SeedSetup {
    cache.entry(seed).or_insert_with(|| {
        let (train, test_ready) = prepare_split(ds, cfg.test_fraction, cfg.clip, seed)?;
        let train_cfg = TrainConfig { seed, ..cfg.train };
        let baseline = baseline_accuracy(&train, &test_ready, cfg.clip, &train_cfg)?;
        Ok((train, test_ready, baseline))
    })
}

#[allow(clippy::too_many_arguments)]
fn compute_row(
    cfg: &SweepConfig,
    mode: Mode,
    mixture_order: usize,
    num_clients: usize,
    epsilon: f64,
    seed: u64,
    setup: &SeedSetup,
) -> Vec<String> {
    let base = vec![
        mode.to_string(),
        mixture_order.to_string(),
        num_clients.to_string(),
        format_epsilon(epsilon),
        seed.to_string(),
    ];
    let filled = |acc: String, baseline: String, ratio: String, error: String| {
        let mut row = base.clone();
        row.extend([acc, baseline, ratio, error]);
        row
    };

    let (train, test_ready, baseline) = match setup {
        Ok(v) => v,
        Err(e) => return filled(String::new(), String::new(), String::new(), e.to_string()),
    };
    let privacy = PrivacyParams {
        epsilon_target: epsilon,
        delta: cfg.delta,
        mixture_order,
        clip: cfg.clip,
        releases: cfg.releases,
        dataset_size: train.len(),
        num_classes: train.num_classes,
        num_clients,
        alpha_max: cfg.alpha_max,
    };
    let run = RunConfig { mode, privacy, master_seed: seed, tau_override: None };
    let train_cfg = TrainConfig { seed, ..cfg.train };
    match run_and_score(train, test_ready, &run, &train_cfg) {
        Ok(accuracy) => {
            let ratio = utility_ratio(accuracy, *baseline)
                .map(|r| format!("{r}"))
                .unwrap_or_default();
            filled(format!("{accuracy}"), format!("{baseline}"), ratio, String::new())
        }
        Err(e) => filled(String::new(), format!("{baseline}"), String::new(), e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;

    fn grid_one() -> SweepGrid {
        SweepGrid {
            modes: vec![Mode::NonPrivate],
            mixture_orders: vec![2],
            client_counts: vec![2],
            epsilons: vec![f64::INFINITY],
        }
    }

    fn cfg() -> SweepConfig {
        SweepConfig {
            delta: 1e-5,
            clip: 1.0,
            releases: 60,
            alpha_max: 32,
            test_fraction: 0.25,
            train: TrainConfig { epochs: 10, ..TrainConfig::default() },
        }
    }

    #[test]
    fn single_point_grid_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let ds = make_blobs(3, 40, 4, 0.5, 4.0, 2).unwrap();
        let outcome = sweep(&ds, &grid_one(), &cfg(), &[7], &out).unwrap();
        assert_eq!(outcome, SweepOutcome { rows_total: 1, rows_computed: 1 });
        let content = std::fs::read_to_string(&out).unwrap();
        assert!(content.starts_with("mode,l,S,epsilon,seed,accuracy,baseline,utility_ratio,error"));
        assert!(content.contains("non-private,2,2,inf,7,"));
    }

    #[test]
    fn rerun_computes_nothing_and_leaves_the_file_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let ds = make_blobs(3, 40, 4, 0.5, 4.0, 2).unwrap();
        sweep(&ds, &grid_one(), &cfg(), &[7, 8], &out).unwrap();
        let first = std::fs::read_to_string(&out).unwrap();
        let outcome = sweep(&ds, &grid_one(), &cfg(), &[7, 8], &out).unwrap();
        assert_eq!(outcome.rows_computed, 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
    }

    #[test]
    fn sweep_is_deterministic_from_scratch() {
        let dir = tempfile::tempdir().unwrap();
        let ds = make_blobs(3, 40, 4, 0.5, 4.0, 2).unwrap();
        let out_a = dir.path().join("a.csv");
        let out_b = dir.path().join("b.csv");
        sweep(&ds, &grid_one(), &cfg(), &[3], &out_a).unwrap();
        sweep(&ds, &grid_one(), &cfg(), &[3], &out_b).unwrap();
        assert_eq!(
            std::fs::read_to_string(out_a).unwrap(),
            std::fs::read_to_string(out_b).unwrap()
        );
    }

    #[test]
    fn failing_points_land_in_the_error_column() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let ds = make_blobs(3, 40, 4, 0.5, 4.0, 2).unwrap();
        // 7 clients do not divide the 90-sample training partition.
        let grid = SweepGrid { client_counts: vec![7], ..grid_one() };
        let outcome = sweep(&ds, &grid, &cfg(), &[7], &out).unwrap();
        assert_eq!(outcome.rows_computed, 1);
        let content = std::fs::read_to_string(&out).unwrap();
        let row = content.lines().nth(1).unwrap();
        assert!(row.contains("divide"), "error column should carry the failure: {row}");
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let ds = make_blobs(3, 40, 4, 0.5, 4.0, 2).unwrap();
        let grid = SweepGrid { modes: vec![], ..grid_one() };
        assert!(sweep(&ds, &grid, &cfg(), &[7], &dir.path().join("s.csv")).is_err());
        assert!(sweep(&ds, &grid_one(), &cfg(), &[], &dir.path().join("s.csv")).is_err());
    }
}
