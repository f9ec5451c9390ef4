//! Command-line workbench: data preparation, training, metric sweeps,
//! axiom audits, uncertainty analysis, cost benchmarking, and reports.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use faeval::cache::AttributionCache;
use faeval::checkpoint::{load_model, model_hash, save_model, CheckpointMeta};
use faeval::config::{load_optional, resolve, resolve_opt, FileConfig};
use faeval::grid::{feature_stats, image_grid, tabular_grid, BaselineChoice, MethodSpec};
use faeval::heloc::{load_heloc_cached, resolve_heloc_source};
use faeval::report::emit_report;
use faeval::sweep::{
    compute_attribution, cost_benchmark, params_hash, read_results_csv, run_sweep,
    write_results_csv, write_timings_csv, MethodResources, MetricSelection, MetricsConfig,
    SweepConfig,
};
use faeval_core::attributions::lime::LimeTabularConfig;
use faeval_core::attributions::shap::BaselineMix;
use faeval_core::audit::{pc_optimality_audit, sensitivity_n_audit};
use faeval_core::data::{split_and_standardize, synth_blob_images, synth_linear, SplitDataset};
use faeval_core::metrics::guided::RankingRule;
use faeval_core::metrics::infidelity::{infidelity, infidelity_uncertainty, InfidelityConfig};
use faeval_core::models::train::{train_classifier, ArchSpec, TrainConfig};
use faeval_core::models::{ScoreKind, ScoringModel};
use faeval_core::numerics::{Matrix, RandomStream};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "faeval",
    about = "Feature-attribution fidelity workbench",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve or generate a dataset and print its shape.
    PrepareData(PrepareArgs),
    /// Train a classifier and write a checkpoint.
    Train(TrainArgs),
    /// Run attribution configurations against the fidelity metrics.
    Sweep(SweepArgs),
    /// Run completeness and ordering audits on small exact models.
    Audit(AuditArgs),
    /// Resample infidelity estimates at shrinking sample sizes.
    Uncertainty(UncertaintyArgs),
    /// Compare metric costs in model evaluations and wall time.
    Bench(BenchArgs),
    /// Render tables and plots from a results file.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Dataset: heloc, synth-linear, or synth-image.
    #[arg(long)]
    dataset: Option<String>,
    /// Model family: linear or mlp.
    #[arg(long)]
    model: Option<String>,
    /// Root seed for every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Optional TOML config file; flags beat file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory for downloaded or generated data files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint path to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum training epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint to explain; defaults to the train command's output path.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Metric selection: pc, dpc, infidelity, or all.
    #[arg(long)]
    metric: Option<String>,
    /// Guided-perturbation steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Ranking rule override for both curve metrics: signed or absolute.
    #[arg(long)]
    ranking: Option<String>,
    /// Score the metrics read: logit or probability.
    #[arg(long)]
    score: Option<String>,
    /// Attribution cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Output directory for results and timings.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explain at most this many samples; 0 means the whole split.
    #[arg(long)]
    limit: Option<usize>,
    /// Split to explain: val or test.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Feature count of the audited synthetic model (at most 8).
    #[arg(long)]
    dim: Option<usize>,
    /// Number of audited inputs.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory for audit.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UncertaintyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint to explain.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory for uncertainty.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of explained samples.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint to explain.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory for bench.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSV produced by the sweep command.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Output directory for tables and plots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional TOML config file; flags beat file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::PrepareData(a) => prepare_data(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Audit(a) => audit(a),
        Command::Uncertainty(a) => uncertainty(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    }
}

const DEFAULT_SEED: u64 = 17;
const IMAGE_SIDE: usize = 16;

struct Resolved {
    dataset: String,
    model: String,
    seed: u64,
    file: FileConfig,
}

fn resolve_common(common: &CommonArgs) -> Result<Resolved> {
    let file = load_optional(common.config.as_deref())?;
    let dataset = resolve(
        common.dataset.clone(),
        file.dataset.clone(),
        "heloc".to_string(),
    );
    let model = resolve(
        common.model.clone(),
        file.model.clone(),
        "linear".to_string(),
    );
    if !matches!(dataset.as_str(), "heloc" | "synth-linear" | "synth-image") {
        bail!("unknown dataset {dataset:?}; expected heloc, synth-linear, or synth-image");
    }
    if !matches!(model.as_str(), "linear" | "mlp") {
        bail!("unknown model {model:?}; expected linear or mlp");
    }
    let seed = resolve(common.seed, file.seed, DEFAULT_SEED);
    Ok(Resolved {
        dataset,
        model,
        seed,
        file,
    })
}

fn parse_metric(s: &str) -> Result<MetricSelection> {
    Ok(match s {
        "pc" => MetricSelection::Pc,
        "dpc" => MetricSelection::Dpc,
        "infidelity" => MetricSelection::Infidelity,
        "all" => MetricSelection::All,
        other => bail!("unknown metric {other:?}; expected pc, dpc, infidelity, or all"),
    })
}

fn parse_ranking(s: &str) -> Result<RankingRule> {
    Ok(match s {
        "signed" => RankingRule::SignedDesc,
        "absolute" => RankingRule::AbsoluteDesc,
        other => bail!("unknown ranking {other:?}; expected signed or absolute"),
    })
}

fn parse_score(s: &str) -> Result<ScoreKind> {
    Ok(match s {
        "logit" => ScoreKind::Logit,
        "probability" => ScoreKind::Probability,
        other => bail!("unknown score {other:?}; expected logit or probability"),
    })
}

fn default_checkpoint(dataset: &str, model: &str) -> PathBuf {
    PathBuf::from(format!("models/{dataset}-{model}.bin"))
}

/// Tabular data, split 60:20:20 and standardized with training statistics.
fn load_tabular_split(dataset: &str, seed: u64) -> Result<SplitDataset> {
    let ds = match dataset {
        "heloc" => {
            let data_dir = Path::new("data");
            let (csv, official) = resolve_heloc_source(data_dir, seed)?;
            if !official {
                eprintln!(
                    "note: no source file found, using the generated stand-in at {}",
                    csv.display()
                );
            }
            let (ds, from_cache) = load_heloc_cached(&csv, data_dir)?;
            if from_cache {
                eprintln!("note: loaded parsed dataset from cache");
            }
            ds
        }
        "synth-linear" => {
            let mut stream = RandomStream::new(seed).fork_str("synth-linear");
            synth_linear(4000, 12, 0.5, &mut stream)?.0
        }
        other => bail!("dataset {other:?} is not tabular"),
    };
    let mut stream = RandomStream::new(seed).fork_str("split");
    Ok(split_and_standardize(&ds, (0.6, 0.2, 0.2), &mut stream)?)
}

struct ImageSplits {
    side: usize,
    train: (Matrix, Vec<u8>),
    val: (Matrix, Vec<u8>),
    test: (Matrix, Vec<u8>),
    train_mean: Vec<f64>,
}

/// Synthetic blob images, split by index; labels alternate so contiguous
/// slices stay balanced.
fn load_image_split(seed: u64) -> Result<ImageSplits> {
    let mut stream = RandomStream::new(seed).fork_str("synth-image");
    let ds = synth_blob_images(800, IMAGE_SIDE, 1.5, &mut stream)?;
    let slice = |lo: usize, hi: usize| -> Result<(Matrix, Vec<u8>)> {
        let rows: Vec<Vec<f64>> = (lo..hi).map(|i| ds.images.row(i).to_vec()).collect();
        Ok((Matrix::from_rows(&rows)?, ds.labels[lo..hi].to_vec()))
    };
    let train = slice(0, 480)?;
    let mean = {
        let (m, _) = &train;
        let mut acc = vec![0.0; m.cols()];
        for i in 0..m.rows() {
            for (a, v) in acc.iter_mut().zip(m.row(i)) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= m.rows() as f64;
        }
        acc
    };
    Ok(ImageSplits {
        side: IMAGE_SIDE,
        train,
        val: slice(480, 640)?,
        test: slice(640, 800)?,
        train_mean: mean,
    })
}

fn prepare_data(args: PrepareArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    let out = resolve(args.out, r.file.out.clone(), PathBuf::from("data"));
    match r.dataset.as_str() {
        "heloc" => {
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let (csv, official) = resolve_heloc_source(&out, r.seed)?;
            let (ds, _) = load_heloc_cached(&csv, &out)?;
            println!(
                "heloc: {} rows, {} features, class counts {:?}, source {} ({})",
                ds.n(),
                ds.dim(),
                ds.class_counts(),
                csv.display(),
                if official { "official" } else { "stand-in" }
            );
        }
        "synth-linear" => {
            let mut stream = RandomStream::new(r.seed).fork_str("synth-linear");
            let (ds, w) = synth_linear(4000, 12, 0.5, &mut stream)?;
            println!(
                "synth-linear: {} rows, {} features, class counts {:?}, true weight norm {:.4}",
                ds.n(),
                ds.dim(),
                ds.class_counts(),
                w.iter().map(|v| v * v).sum::<f64>().sqrt()
            );
        }
        "synth-image" => {
            let splits = load_image_split(r.seed)?;
            println!(
                "synth-image: 800 images at {0}x{0}, splits 480/160/160",
                splits.side
            );
        }
        _ => unreachable!("validated in resolve_common"),
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    let out = resolve_opt(args.out, r.file.out.clone())
        .unwrap_or_else(|| default_checkpoint(&r.dataset, &r.model));
    let arch = match r.model.as_str() {
        "linear" => ArchSpec::Linear,
        _ => ArchSpec::default_mlp(),
    };
    let mut tc = TrainConfig {
        seed: r.seed,
        ..TrainConfig::default()
    };
    if let Some(e) = args.epochs {
        tc.epochs = e;
    }

    let report = match r.dataset.as_str() {
        "synth-image" => {
            let splits = load_image_split(r.seed)?;
            train_classifier(
                &splits.train.0,
                &splits.train.1,
                &splits.val.0,
                &splits.val.1,
                &arch,
                &tc,
            )?
        }
        _ => {
            let split = load_tabular_split(&r.dataset, r.seed)?;
            train_classifier(
                &split.train.features,
                &split.train.labels,
                &split.val.features,
                &split.val.labels,
                &arch,
                &tc,
            )?
        }
    };

    let meta = CheckpointMeta {
        seed: r.seed,
        best_epoch: report.best_epoch as u32,
        epochs_run: report.epochs_run as u32,
        train_accuracy: report.train_accuracy,
        train_auroc: report.train_auroc,
        val_accuracy: report.val_accuracy,
        val_auroc: report.val_auroc,
        dataset_tag: r.dataset.clone(),
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    save_model(&out, &report.model, &meta)?;
    println!(
        "trained {} on {}: train acc {:.4} auroc {:.4}, val acc {:.4} auroc {:.4}, \
         best epoch {}/{}, hash {}, saved to {}",
        r.model,
        r.dataset,
        report.train_accuracy,
        report.train_auroc,
        report.val_accuracy,
        report.val_auroc,
        report.best_epoch,
        report.epochs_run,
        model_hash(&report.model),
        out.display()
    );
    Ok(())
}

fn take_rows(m: &Matrix, limit: usize) -> Result<Matrix> {
    let n = if limit == 0 { m.rows() } else { limit.min(m.rows()) };
    let rows: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    Ok(Matrix::from_rows(&rows)?)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    let checkpoint = resolve_opt(args.checkpoint, r.file.checkpoint.clone())
        .unwrap_or_else(|| default_checkpoint(&r.dataset, &r.model));
    let (model, meta) = load_model(&checkpoint)?;
    if meta.dataset_tag != r.dataset {
        eprintln!(
            "warning: checkpoint was trained on {:?}, sweeping {:?}",
            meta.dataset_tag, r.dataset
        );
    }
    let selection = parse_metric(&resolve(
        args.metric,
        r.file.metric.clone(),
        "all".to_string(),
    ))?;
    let score = parse_score(&resolve(
        args.score,
        r.file.score.clone(),
        "probability".to_string(),
    ))?;
    let ranking = resolve_opt(args.ranking, r.file.ranking.clone())
        .map(|s| parse_ranking(&s))
        .transpose()?;
    let split_name = resolve(args.split, r.file.split.clone(), "val".to_string());
    if !matches!(split_name.as_str(), "val" | "test") {
        bail!("unknown split {split_name:?}; expected val or test");
    }
    let limit = resolve(args.limit, r.file.limit, 64);
    let steps_flag = resolve_opt(args.steps, r.file.steps);
    let cache_dir = resolve(
        args.cache_dir,
        r.file.cache_dir.clone(),
        PathBuf::from("cache"),
    );
    let out = resolve(args.out, r.file.out.clone(), PathBuf::from("runs"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let cache = AttributionCache::new(&cache_dir)?;

    let started = std::time::Instant::now();
    let records = if r.dataset == "synth-image" {
        let splits = load_image_split(r.seed)?;
        let eval = if split_name == "val" { &splits.val } else { &splits.test };
        let samples = take_rows(&eval.0, limit)?;
        let stats = feature_stats(&splits.train.0);
        let mut metrics = MetricsConfig::image_default(splits.side);
        apply_overrides(&mut metrics, steps_flag, ranking, score, samples.cols());
        let res = MethodResources {
            stats: &stats,
            pool_features: &splits.train.0,
            pool_labels: &splits.train.1,
            image_side: Some(splits.side),
            dataset_mean: Some(&splits.train_mean),
        };
        let cfg = SweepConfig {
            model_id: model_hash(&model),
            split: split_name.clone(),
            seed: r.seed,
            selection,
            metrics,
        };
        run_sweep(&model, &samples, &image_grid(splits.side), &res, &cfg, Some(&cache))?
    } else {
        let split = load_tabular_split(&r.dataset, r.seed)?;
        let eval = if split_name == "val" { &split.val } else { &split.test };
        let samples = take_rows(&eval.features, limit)?;
        let stats = feature_stats(&split.train.features);
        let mut metrics = MetricsConfig::tabular_default(samples.cols());
        apply_overrides(&mut metrics, steps_flag, ranking, score, samples.cols());
        let res = MethodResources {
            stats: &stats,
            pool_features: &split.train.features,
            pool_labels: &split.train.labels,
            image_side: None,
            dataset_mean: None,
        };
        let cfg = SweepConfig {
            model_id: model_hash(&model),
            split: split_name.clone(),
            seed: r.seed,
            selection,
            metrics,
        };
        run_sweep(&model, &samples, &tabular_grid(), &res, &cfg, Some(&cache))?
    };

    let results_path = out.join("results.csv");
    write_results_csv(&results_path, &records)?;
    write_timings_csv(&out.join("timings.csv"), &records)?;
    println!(
        "sweep wrote {} records to {} in {:.1}s (cache: {} hits, {} misses)",
        records.len(),
        results_path.display(),
        started.elapsed().as_secs_f64(),
        cache.hits(),
        cache.misses()
    );
    Ok(())
}

fn apply_overrides(
    metrics: &mut MetricsConfig,
    steps: Option<usize>,
    ranking: Option<RankingRule>,
    score: ScoreKind,
    dim: usize,
) {
    if let Some(t) = steps {
        metrics.steps = t;
    }
    if metrics.steps > dim {
        eprintln!(
            "note: clamping steps from {} to the feature count {}",
            metrics.steps, dim
        );
        metrics.steps = dim;
    }
    if let Some(rule) = ranking {
        metrics.pc_ranking = rule;
        metrics.dpc_ranking = rule;
    }
    metrics.score = score;
}

fn audit(args: AuditArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    let dim = args.dim.unwrap_or(6);
    if dim == 0 || dim > 8 {
        bail!("audit dim must lie in 1..=8, got {dim}");
    }
    let n_samples = args.samples.unwrap_or(5);
    let out = resolve(args.out, r.file.out.clone(), PathBuf::from("runs"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut stream = RandomStream::new(r.seed).fork_str("audit-data");
    let (ds, w) = synth_linear(256, dim, 0.0, &mut stream)?;
    let model = match r.model.as_str() {
        "linear" => ScoringModel::linear(w, 0.0)?,
        _ => {
            let tc = TrainConfig {
                seed: r.seed,
                epochs: 60,
                ..TrainConfig::default()
            };
            train_classifier(
                &ds.features,
                &ds.labels,
                &ds.features,
                &ds.labels,
                &ArchSpec::Mlp { hidden: vec![8, 8] },
                &tc,
            )?
            .model
        }
    };
    let stats = feature_stats(&ds.features);
    let res = MethodResources {
        stats: &stats,
        pool_features: &ds.features,
        pool_labels: &ds.labels,
        image_side: None,
        dataset_mean: None,
    };
    let specs = [
        MethodSpec::Gradient,
        MethodSpec::IntegratedGradients {
            baseline: BaselineChoice::Zero,
            n_steps: 64,
            multiply_by_inputs: true,
        },
        MethodSpec::DeepLiftShap {
            mix: BaselineMix::Random,
            n_baselines: 256,
            multiply_by_inputs: true,
        },
    ];
    let zeros = vec![0.0; dim];
    let mut csv = String::from(
        "model,method,sample,subsets_checked,max_residual,sensitivity_pass,\
         attr_aupc,best_aupc,optimality_pass\n",
    );
    println!("auditing {} on {dim}-feature exact data, {n_samples} samples", r.model);
    for spec in &specs {
        let root = RandomStream::new(r.seed)
            .fork_str(spec.method_id())
            .fork_str(&spec.params_string());
        for i in 0..n_samples.min(ds.n()) {
            let x = ds.features.row(i);
            let mut s = root.fork(i as u64);
            // Expectation methods are audited against the mean of their own
            // baseline draw; pointwise methods against the zero vector.
            let (attr, audit_baseline) = match spec {
                MethodSpec::DeepLiftShap {
                    mix,
                    n_baselines,
                    multiply_by_inputs,
                } => {
                    let baselines = faeval_core::attributions::shap::stratified_baselines(
                        &ds.features,
                        &ds.labels,
                        *mix,
                        *n_baselines,
                        &mut s,
                    )?;
                    let attr = faeval_core::attributions::shap::deepliftshap(
                        &model,
                        x,
                        1,
                        &baselines,
                        &mix.label(),
                        *multiply_by_inputs,
                    )?;
                    let mut mean_b = vec![0.0; dim];
                    for bi in 0..baselines.rows() {
                        for (acc, v) in mean_b.iter_mut().zip(baselines.row(bi)) {
                            *acc += v;
                        }
                    }
                    for acc in &mut mean_b {
                        *acc /= baselines.rows() as f64;
                    }
                    (attr, mean_b)
                }
                _ => (
                    compute_attribution(spec, &model, x, 1, &res, &mut s)?,
                    zeros.clone(),
                ),
            };
            let sens = sensitivity_n_audit(&model, x, &attr.values, &audit_baseline, 1e-6)?;
            let opt = pc_optimality_audit(
                &model,
                x,
                &attr.values,
                &audit_baseline,
                ScoreKind::Logit,
                1e-9,
            )?;
            writeln!(
                csv,
                "{},{},{},{},{:e},{},{},{},{}",
                model_hash(&model),
                spec.method_id(),
                i,
                sens.checked_subsets,
                sens.max_residual,
                sens.pass,
                opt.attr_aupc,
                opt.best_aupc,
                opt.pass
            )
            .expect("string write");
            println!(
                "  {:22} sample {i}: completeness {} (max residual {:.2e}), \
                 ordering {} (aupc {:.5} vs best {:.5})",
                spec.method_id(),
                if sens.pass { "pass" } else { "FAIL" },
                sens.max_residual,
                if opt.pass { "pass" } else { "FAIL" },
                opt.attr_aupc,
                opt.best_aupc
            );
        }
    }
    let path = out.join("audit.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// The configurations the uncertainty command resamples.
fn uncertainty_specs() -> Vec<MethodSpec> {
    vec![
        MethodSpec::Gradient,
        MethodSpec::GuidedBackprop,
        MethodSpec::SmoothGrad { sigma: 0.1, n_samples: 64 },
        MethodSpec::VarGrad { sigma: 0.1, n_samples: 64 },
        MethodSpec::IntegratedGradients {
            baseline: BaselineChoice::Zero,
            n_steps: 64,
            multiply_by_inputs: true,
        },
        MethodSpec::IntegratedGradients {
            baseline: BaselineChoice::FeatureMedian,
            n_steps: 64,
            multiply_by_inputs: false,
        },
        MethodSpec::DeepLiftShap {
            mix: BaselineMix::Random,
            n_baselines: 1024,
            multiply_by_inputs: true,
        },
        MethodSpec::LimeTabular(LimeTabularConfig {
            alpha: 0.001,
            sigma_kernel: 0.75,
            sigma_sample: 0.5,
            n_samples: 256,
        }),
        MethodSpec::LimeTabular(LimeTabularConfig {
            alpha: 0.055,
            sigma_kernel: 0.5,
            sigma_sample: 1.0,
            n_samples: 64,
        }),
        MethodSpec::Random { constant: false },
    ]
}

const UNCERTAINTY_SIZES: [usize; 6] = [20, 40, 80, 160, 320, 640];
const UNCERTAINTY_REPEATS: usize = 64;

fn uncertainty(args: UncertaintyArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    if r.dataset == "synth-image" {
        bail!("the uncertainty command works on tabular datasets");
    }
    let checkpoint = resolve_opt(args.checkpoint, r.file.checkpoint.clone())
        .unwrap_or_else(|| default_checkpoint(&r.dataset, &r.model));
    let (model, _) = load_model(&checkpoint)?;
    let out = resolve(args.out, r.file.out.clone(), PathBuf::from("runs"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let limit = resolve(args.limit, r.file.limit, 1).max(1);

    let split = load_tabular_split(&r.dataset, r.seed)?;
    let d = split.val.dim();
    let stats = feature_stats(&split.train.features);
    let res = MethodResources {
        stats: &stats,
        pool_features: &split.train.features,
        pool_labels: &split.train.labels,
        image_side: None,
        dataset_mean: None,
    };
    let inf_cfg = InfidelityConfig {
        n_perturbations: 640,
        ..InfidelityConfig::tabular_default(d)
    };

    let mut csv = String::from("method,params_hash,sample,size,mean,std\n");
    for spec in uncertainty_specs() {
        let root = RandomStream::new(r.seed)
            .fork_str(spec.method_id())
            .fork_str(&spec.params_string());
        let p_hash = params_hash(&spec.params_string());
        for i in 0..limit.min(split.val.n()) {
            let x = split.val.features.row(i);
            let mut s = root.fork(i as u64);
            let attr = compute_attribution(&spec, &model, x, 1, &res, &mut s)?;
            let mut inf_stream = root.fork(i as u64).fork_str("infidelity");
            let outcome = infidelity(
                &model,
                x,
                &attr,
                &inf_cfg,
                ScoreKind::Probability,
                &mut inf_stream,
            )?;
            let stats_rows =
                infidelity_uncertainty(&outcome.pairs, &UNCERTAINTY_SIZES, UNCERTAINTY_REPEATS)?;
            for stat in &stats_rows {
                writeln!(
                    csv,
                    "{},{},{},{},{:e},{:e}",
                    spec.method_id(),
                    p_hash,
                    i,
                    stat.size,
                    stat.mean,
                    stat.std
                )
                .expect("string write");
            }
            let trend: Vec<String> = stats_rows
                .iter()
                .map(|s| format!("{}:{:.2e}", s.size, s.std))
                .collect();
            println!("{:22} sample {i} resampled std {}", spec.method_id(), trend.join(" "));
        }
    }
    let path = out.join("uncertainty.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let r = resolve_common(&args.common)?;
    if r.dataset == "synth-image" {
        bail!("the bench command works on tabular datasets");
    }
    let checkpoint = resolve_opt(args.checkpoint, r.file.checkpoint.clone())
        .unwrap_or_else(|| default_checkpoint(&r.dataset, &r.model));
    let (model, _) = load_model(&checkpoint)?;
    let split = load_tabular_split(&r.dataset, r.seed)?;
    let d = split.val.dim();
    let x = split.val.features.row(0);
    let attr =
        faeval_core::attributions::gradients::gradient_attribution(&model, x, 1)?;
    let mut metrics = MetricsConfig::tabular_default(d);
    metrics.steps = metrics.steps.min(d);
    metrics.infidelity.n_perturbations = 640;
    let mut stream = RandomStream::new(r.seed).fork_str("bench");
    let report = cost_benchmark(&model, x, &attr, &metrics, &mut stream)?;
    println!(
        "guided curves (MoRF+LeRF, T={}): {} perturbed evaluations in {:.4}s",
        metrics.steps, report.curve_evals, report.curve_seconds
    );
    println!(
        "infidelity (n={}): {} perturbed evaluations in {:.4}s",
        metrics.infidelity.n_perturbations, report.infidelity_evals, report.infidelity_seconds
    );
    println!(
        "evaluation ratio {:.1}x, wall-clock ratio {:.2}x (reported, not asserted)",
        report.ratio,
        report.infidelity_seconds / report.curve_seconds.max(1e-12)
    );
    if let Some(out) = resolve_opt(args.out, r.file.out.clone()) {
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("bench.csv");
        std::fs::write(
            &path,
            format!(
                "curve_evals,infidelity_evals,eval_ratio,curve_seconds,infidelity_seconds\n\
                 {},{},{},{:.6},{:.6}\n",
                report.curve_evals,
                report.infidelity_evals,
                report.ratio,
                report.curve_seconds,
                report.infidelity_seconds
            ),
        )
        .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let file = load_optional(args.config.as_deref())?;
    let results = resolve_opt(args.results, None)
        .unwrap_or_else(|| PathBuf::from("runs/results.csv"));
    let out = resolve(args.out, file.out, PathBuf::from("runs/report"));
    let records = read_results_csv(&results)?;
    if records.is_empty() {
        bail!("{} holds no records", results.display());
    }
    let outcome = emit_report(&records, &out)?;
    println!(
        "report wrote {} files to {}",
        outcome.files.len(),
        out.display()
    );
    for n in &outcome.notices {
        println!("  skipped: {n}");
    }
    Ok(())
}
