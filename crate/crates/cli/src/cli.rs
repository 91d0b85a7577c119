//! Flag definitions for every subcommand.

use clap::{Args, Parser, Subcommand};
use fedsynth_core::federation::Mode;

/// Parses epsilon values; infinity is spelled `inf`.
pub fn parse_epsilon(s: &str) -> Result<f64, String> {
    let value = match s {
        "inf" | "Inf" | "INF" => f64::INFINITY,
        other => other.parse::<f64>().map_err(|e| format!("bad epsilon {other:?}: {e}"))?,
    };
    if value > 0.0 {
        Ok(value)
    } else {
        Err(format!("epsilon must be positive, got {value}"))
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

fn parse_list<T, E: std::fmt::Display>(
    s: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| parse(part).map_err(|e| format!("{part:?}: {e}")))
        .collect()
}

pub fn parse_mode_list(s: &str) -> Result<Vec<Mode>, String> {
    parse_list(s, parse_mode)
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    parse_list(s, |p| p.parse::<usize>())
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, String> {
    parse_list(s, |p| p.parse::<u64>())
}

pub fn parse_epsilon_list(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s, parse_epsilon)
}

#[derive(Debug, Parser)]
#[command(
    name = "fedsynth",
    about = "Federated differentially private synthetic data generation",
    version,
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate noise scales for a target privacy budget.
    Calibrate(CalibrateArgs),
    /// Forward accounting: epsilon achieved by a given noise scale.
    Account(AccountArgs),
    /// Generate a synthetic dataset from a real one.
    Generate(GenerateArgs),
    /// Train the probe classifier on synthetic data and score it on real data.
    Evaluate(EvaluateArgs),
    /// Run a parameter grid, one CSV row per evaluated run.
    Sweep(SweepArgs),
    /// Generate a Gaussian-blob dataset as CSV.
    MakeBlobs(MakeBlobsArgs),
}

/// Privacy/mechanism parameters shared by the accounting commands.
#[derive(Debug, Args, Clone)]
pub struct BudgetArgs {
    /// DP failure probability delta.
    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,

    /// Order of mixture: samples averaged per synthetic record.
    #[arg(long = "l", default_value_t = 4)]
    pub mixture_order: usize,

    /// l2 clipping threshold applied during preprocessing.
    #[arg(long = "c", default_value_t = 1.0)]
    pub clip: f64,

    /// Released synthetic records T (equals records per client).
    #[arg(long)]
    pub releases: usize,

    /// Total dataset size N.
    #[arg(long)]
    pub dataset_size: usize,

    /// Number of classes K.
    #[arg(long = "classes")]
    pub num_classes: usize,

    /// Number of clients S.
    #[arg(long = "clients", default_value_t = 1)]
    pub num_clients: usize,

    /// Largest Renyi order scanned by the accountant.
    #[arg(long, default_value_t = 200)]
    pub alpha_max: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Target privacy budget ("inf" disables noise).
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: f64,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Mode whose per-client scales should be printed.
    #[arg(long, value_parser = parse_mode, default_value = "fed-cape")]
    pub mode: Mode,

    /// Also report epsilon recomputed with the client-local sampling
    /// probability (diagnostic only).
    #[arg(long = "diag-local-p", default_value_t = false)]
    pub diag_local_p: bool,

    /// Write the flat text report here.
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,

    /// Write the RDP curve (alpha, eps') CSV here.
    #[arg(long)]
    pub curve: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct AccountArgs {
    /// Central noise scale to account for.
    #[arg(long = "tau-g")]
    pub tau_g: f64,

    #[command(flatten)]
    pub budget: BudgetArgs,

    #[arg(long = "diag-local-p", default_value_t = false)]
    pub diag_local_p: bool,

    #[arg(long)]
    pub report: Option<std::path::PathBuf>,

    #[arg(long)]
    pub curve: Option<std::path::PathBuf>,
}

/// Dataset source flags: a CSV file or an IDX image/label pair.
#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Real dataset as CSV with a header row.
    #[arg(long, conflicts_with_all = ["idx_images", "idx_labels"])]
    pub data: Option<std::path::PathBuf>,

    /// Zero-based label column ("last" when omitted).
    #[arg(long)]
    pub label_column: Option<usize>,

    /// IDX image file (pairs with --idx-labels).
    #[arg(long, requires = "idx_labels")]
    pub idx_images: Option<std::path::PathBuf>,

    /// IDX label file (pairs with --idx-images).
    #[arg(long, requires = "idx_images")]
    pub idx_labels: Option<std::path::PathBuf>,

    /// Class count; inferred from the labels when omitted.
    #[arg(long = "classes")]
    pub num_classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_parser = parse_mode)]
    pub mode: Mode,

    /// Target budget; exactly one of --epsilon / --tau-g unless the mode is
    /// non-private.
    #[arg(long, value_parser = parse_epsilon, conflicts_with = "tau_g")]
    pub epsilon: Option<f64>,

    /// Explicit central noise scale (skips calibration).
    #[arg(long = "tau-g")]
    pub tau_g: Option<f64>,

    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,

    #[arg(long = "l", default_value_t = 4)]
    pub mixture_order: usize,

    #[arg(long = "c", default_value_t = 1.0)]
    pub clip: f64,

    /// Released synthetic records T; defaults to the dataset size.
    #[arg(long)]
    pub releases: Option<usize>,

    #[arg(long = "clients", default_value_t = 1)]
    pub num_clients: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 200)]
    pub alpha_max: usize,

    /// Output path for the synthetic dataset.
    #[arg(long)]
    pub out: std::path::PathBuf,

    /// Output format.
    #[arg(long, value_parser = ["bin", "csv"], default_value = "bin")]
    pub format: String,

    /// Report path; defaults to `<out>.report.txt`.
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Synthetic dataset (.csv, or the binary container).
    #[arg(long)]
    pub synthetic: std::path::PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Explicit real test CSV; when omitted, a test partition is split off
    /// --data with --test-fraction.
    #[arg(long)]
    pub test: Option<std::path::PathBuf>,

    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,

    /// Also train on the real data and report the utility ratio.
    #[arg(long, default_value_t = false)]
    pub baseline: bool,

    #[arg(long = "c", default_value_t = 1.0)]
    pub clip: f64,

    #[arg(long, default_value_t = 50)]
    pub epochs: usize,

    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,

    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Modes to sweep, comma-separated.
    #[arg(long, value_parser = parse_mode_list, default_value = "fed-cape")]
    pub modes: std::vec::Vec<Mode>,

    /// Mixture orders to sweep, comma-separated.
    #[arg(long = "l-grid", value_parser = parse_usize_list, default_value = "4")]
    pub l_grid: std::vec::Vec<usize>,

    /// Client counts to sweep, comma-separated.
    #[arg(long = "s-grid", value_parser = parse_usize_list, default_value = "10")]
    pub s_grid: std::vec::Vec<usize>,

    /// Epsilon values to sweep, comma-separated ("inf" allowed).
    #[arg(long = "epsilon-grid", value_parser = parse_epsilon_list, default_value = "inf")]
    pub epsilon_grid: std::vec::Vec<f64>,

    /// Seeds, comma-separated; every grid point runs once per seed.
    #[arg(long, value_parser = parse_u64_list, default_value = "42")]
    pub seeds: std::vec::Vec<u64>,

    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,

    #[arg(long = "c", default_value_t = 1.0)]
    pub clip: f64,

    /// Released records per run; defaults to the training partition size.
    #[arg(long)]
    pub releases: Option<usize>,

    #[arg(long, default_value_t = 200)]
    pub alpha_max: usize,

    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,

    #[arg(long, default_value_t = 50)]
    pub epochs: usize,

    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,

    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,

    /// Output CSV; reruns resume from it.
    #[arg(long)]
    pub out: std::path::PathBuf,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct MakeBlobsArgs {
    #[arg(long = "classes", default_value_t = 10)]
    pub num_classes: usize,

    #[arg(long, default_value_t = 500)]
    pub per_class: usize,

    #[arg(long = "dim", default_value_t = 20)]
    pub dim: usize,

    /// Within-cluster standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,

    /// Centers are uniform in [-center-scale, center-scale]^dim.
    #[arg(long, default_value_t = 5.0)]
    pub center_scale: f64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long)]
    pub out: std::path::PathBuf,
}
