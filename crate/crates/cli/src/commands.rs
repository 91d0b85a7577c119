//! Subcommand handlers. Each one validates its flags, runs the corresponding
//! core operation, prints flat `key=value` lines to stdout and writes any
//! requested artifacts atomically.

use crate::cli::*;
use fedsynth_core::accountant::{
    calibrate_tau, total_epsilon, total_epsilon_local_p, AccountingReport, PrivacyParams,
};
use fedsynth_core::data::{
    make_blobs, read_binary_synthetic, read_csv_dataset, read_idx_images, read_idx_labels,
    write_binary_synthetic, write_csv_dataset, write_synthetic_csv,
};
use fedsynth_core::error::{Error, Result};
use fedsynth_core::eval::{
    baseline_accuracy, evaluate_accuracy, prepare_split, preprocess_with_train_stats, sweep,
    train_softmax, utility_ratio, SweepConfig, SweepGrid, TrainConfig,
};
use fedsynth_core::federation::{mode_scales, run_pipeline, Mode, RunConfig};
use fedsynth_core::Dataset;
use std::io::BufRead;
use std::path::{Path, PathBuf};

fn init_threads(threads: usize) {
    // Repeat initialization (e.g. in-process tests) is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn privacy_from(budget: &BudgetArgs, epsilon_target: f64) -> PrivacyParams {
    PrivacyParams {
        epsilon_target,
        delta: budget.delta,
        mixture_order: budget.mixture_order,
        clip: budget.clip,
        releases: budget.releases,
        dataset_size: budget.dataset_size,
        num_classes: budget.num_classes,
        num_clients: budget.num_clients,
        alpha_max: budget.alpha_max,
    }
}

fn write_report_artifacts(
    report: &AccountingReport,
    report_path: Option<&Path>,
    curve_path: Option<&Path>,
) -> Result<()> {
    if let Some(path) = report_path {
        fedsynth_core::data::write_text_atomic(path, &report.to_text())?;
    }
    if let Some(path) = curve_path {
        fedsynth_core::data::write_text_atomic(path, &report.rdp_curve_csv())?;
    }
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let params = privacy_from(&args.budget, args.epsilon);
    if args.epsilon.is_finite() {
        params.validate()?;
    }
    let (_, report) = calibrate_tau(&params)?;
    let scales = mode_scales(args.mode, report.tau_g, params.num_clients);

    println!("tau_g_central={}", report.tau_g);
    println!("mode={}", args.mode);
    println!("tau_g={}", scales.tau_g);
    println!("tau_e={}", scales.tau_e);
    println!("epsilon_achieved={}", report.epsilon_achieved);
    println!("alpha_star={}", report.alpha_star);
    if args.diag_local_p && report.tau_g > 0.0 {
        let diag = total_epsilon_local_p(&params, report.tau_g)?;
        println!("epsilon_local_p={}", diag.epsilon_achieved);
    }
    write_report_artifacts(&report, args.report.as_deref(), args.curve.as_deref())
}

pub fn account(args: AccountArgs) -> Result<()> {
    let params = privacy_from(&args.budget, f64::INFINITY);
    params.validate()?;
    let report = total_epsilon(&params, args.tau_g)?;
    println!("epsilon_achieved={}", report.epsilon_achieved);
    println!("alpha_star={}", report.alpha_star);
    println!("tau_g={}", report.tau_g);
    if args.diag_local_p {
        let diag = total_epsilon_local_p(&params, args.tau_g)?;
        println!("epsilon_local_p={}", diag.epsilon_achieved);
    }
    write_report_artifacts(&report, args.report.as_deref(), args.curve.as_deref())
}

/// Number of columns in a CSV header, for resolving "last" label columns.
fn csv_width(path: &Path) -> Result<usize> {
    let file = std::fs::File::open(path)?;
    let mut header = String::new();
    std::io::BufReader::new(file).read_line(&mut header)?;
    if header.trim().is_empty() {
        return Err(Error::Parse(format!("{}: empty header", path.display())));
    }
    Ok(header.trim_end().split(',').count())
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    match (&args.data, &args.idx_images, &args.idx_labels) {
        (Some(csv), None, None) => {
            let width = csv_width(csv)?;
            let label_column = match args.label_column {
                Some(col) => col,
                None => width - 1,
            };
            read_csv_dataset(csv, label_column, args.num_classes)
        }
        (None, Some(images), Some(labels)) => {
            let features = read_idx_images(images)?;
            let labels = read_idx_labels(labels)?;
            let num_classes = match args.num_classes {
                Some(k) => k,
                None => labels.iter().max().map(|&m| m + 1).unwrap_or(1),
            };
            Dataset::new(features, labels, num_classes)
        }
        _ => Err(Error::Config(
            "provide a dataset via --data or --idx-images/--idx-labels".into(),
        )),
    }
}

/// Loads a synthetic dataset as hard-labeled training data. Binary container
/// or CSV, decided by extension.
fn load_synthetic_as_dataset(path: &Path, num_classes: usize) -> Result<Dataset> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let width = csv_width(path)?;
        read_csv_dataset(path, width - 1, Some(num_classes))
    } else {
        read_binary_synthetic(path)?.to_dataset(num_classes)
    }
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    init_threads(args.threads);
    let ds = load_dataset(&args.data)?;
    let releases = args.releases.unwrap_or(ds.len());

    if args.mode != Mode::NonPrivate && args.epsilon.is_none() && args.tau_g.is_none() {
        return Err(Error::Config(format!(
            "mode {} needs --epsilon or --tau-g",
            args.mode
        )));
    }
    let privacy = PrivacyParams {
        epsilon_target: args.epsilon.unwrap_or(f64::INFINITY),
        delta: args.delta,
        mixture_order: args.mixture_order,
        clip: args.clip,
        releases,
        dataset_size: ds.len(),
        num_classes: ds.num_classes,
        num_clients: args.num_clients,
        alpha_max: args.alpha_max,
    };
    let cfg = RunConfig {
        mode: args.mode,
        privacy,
        master_seed: args.seed,
        tau_override: args.tau_g,
    };
    let (released, report) = run_pipeline(&ds, &cfg)?;

    match args.format.as_str() {
        "csv" => write_synthetic_csv(&released, ds.num_classes, &args.out)?,
        _ => write_binary_synthetic(&released, &args.out)?,
    }
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.txt", args.out.display())));
    fedsynth_core::data::write_text_atomic(&report_path, &report.to_text())?;

    println!("records={}", released.len());
    println!("epsilon_achieved={}", report.epsilon_achieved);
    println!("tau_g={}", report.tau_g);
    println!("tau_e={}", report.tau_e);
    println!("out={}", args.out.display());
    println!("report={}", report_path.display());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    init_threads(args.threads);
    let real = load_dataset(&args.data)?;
    let (train, test_ready) = match &args.test {
        Some(test_path) => {
            let width = csv_width(test_path)?;
            let test = read_csv_dataset(test_path, width - 1, Some(real.num_classes))?;
            let test_ready = preprocess_with_train_stats(&real, &test, args.clip)?;
            (real, test_ready)
        }
        None => prepare_split(&real, args.test_fraction, args.clip, args.seed)?,
    };

    let synthetic = load_synthetic_as_dataset(&args.synthetic, train.num_classes)?;
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let weights = train_softmax(&synthetic, &train_cfg)?;
    let accuracy = evaluate_accuracy(&weights, &test_ready)?;

    println!("synthetic={}", args.synthetic.display());
    println!("seed={}", args.seed);
    println!("accuracy={accuracy}");
    if args.baseline {
        let baseline = baseline_accuracy(&train, &test_ready, args.clip, &train_cfg)?;
        println!("baseline={baseline}");
        println!("utility_ratio={}", utility_ratio(accuracy, baseline)?);
    }
    Ok(())
}

pub fn run_sweep(args: SweepArgs) -> Result<()> {
    init_threads(args.threads);
    let ds = load_dataset(&args.data)?;
    let grid = SweepGrid {
        modes: args.modes.clone(),
        mixture_orders: args.l_grid.clone(),
        client_counts: args.s_grid.clone(),
        epsilons: args.epsilon_grid.clone(),
    };
    let releases = match args.releases {
        Some(t) => t,
        None => {
            let test_len = ((ds.len() as f64) * args.test_fraction).round() as usize;
            ds.len().saturating_sub(test_len)
        }
    };
    let cfg = SweepConfig {
        delta: args.delta,
        clip: args.clip,
        releases,
        alpha_max: args.alpha_max,
        test_fraction: args.test_fraction,
        train: TrainConfig {
            epochs: args.epochs,
            learning_rate: args.learning_rate,
            batch_size: args.batch_size,
            seed: 0,
        },
    };
    let outcome = sweep(&ds, &grid, &cfg, &args.seeds, &args.out)?;
    println!("rows_total={}", outcome.rows_total);
    println!("rows_computed={}", outcome.rows_computed);
    println!("out={}", args.out.display());
    Ok(())
}

pub fn run_make_blobs(args: MakeBlobsArgs) -> Result<()> {
    let ds = make_blobs(
        args.num_classes,
        args.per_class,
        args.dim,
        args.spread,
        args.center_scale,
        args.seed,
    )?;
    write_csv_dataset(&ds, &args.out)?;
    println!("samples={}", ds.len());
    println!("classes={}", ds.num_classes);
    println!("dim={}", ds.dim());
    println!("out={}", args.out.display());
    Ok(())
}
