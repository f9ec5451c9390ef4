//! Sweep driver: runs attribution configurations against fidelity metrics
//! and aggregates the results into records.
//!
//! Determinism contract: with a fixed seed, the emitted records are
//! byte-identical across runs. Every random draw flows from
//! `RandomStream::new(seed)` forked by method name, parameter string, and
//! sample index, so records never depend on thread scheduling or cache
//! state. Wall-clock times are kept out of the deterministic output and
//! written to a separate timings file.

use crate::cache::{AttributionCache, CacheKey, RUN_LEVEL_SAMPLE};
use crate::grid::{FeatureStats, MethodSpec};
use anyhow::{bail, Context, Result};
use faeval_core::attributions::gradients::{
    gradient_attribution, guided_backprop_attribution, integrated_gradients, smoothgrad, vargrad,
};
use faeval_core::attributions::lime::{lime_image, lime_tabular};
use faeval_core::attributions::shap::{deepliftshap, stratified_baselines};
use faeval_core::attributions::edge::sobel_edge;
use faeval_core::attributions::{fmt_param, random_attribution, Attribution};
use faeval_core::metrics::guided::{abpc, run_guided_pair, MetricKind, RankingRule};
use faeval_core::metrics::infidelity::{infidelity, infidelity_from_pairs, InfidelityConfig};
use faeval_core::models::{ScoreKind, ScoringModel};
use faeval_core::numerics::{mean, median, sample_variance, Matrix, RandomStream};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

/// Fidelity metrics a sweep can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Area-between-curves of raw prediction change.
    PcAbpc,
    /// Area-between-curves of direction-corrected prediction change.
    DpcAbpc,
    /// Perturbation infidelity.
    Infidelity,
}

impl Metric {
    /// Stable name used in records and file columns.
    pub fn name(&self) -> &'static str {
        match self {
            Metric::PcAbpc => "pc-abpc",
            Metric::DpcAbpc => "dpc-abpc",
            Metric::Infidelity => "infidelity",
        }
    }

    /// All metrics in record order.
    pub fn all() -> [Metric; 3] {
        [Metric::PcAbpc, Metric::DpcAbpc, Metric::Infidelity]
    }
}

/// Which metrics a sweep computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSelection {
    Pc,
    Dpc,
    Infidelity,
    All,
}

impl MetricSelection {
    /// Whether the selection covers a metric.
    pub fn includes(&self, metric: Metric) -> bool {
        match self {
            MetricSelection::All => true,
            MetricSelection::Pc => metric == Metric::PcAbpc,
            MetricSelection::Dpc => metric == Metric::DpcAbpc,
            MetricSelection::Infidelity => metric == Metric::Infidelity,
        }
    }
}

/// Metric settings shared by every configuration in a sweep.
#[derive(Clone, Debug)]
pub struct MetricsConfig {
    /// Guided-perturbation step count.
    pub steps: usize,
    /// Ranking rule for the raw prediction-change curves.
    pub pc_ranking: RankingRule,
    /// Ranking rule for the direction-corrected curves.
    pub dpc_ranking: RankingRule,
    /// Score the metrics read from the model.
    pub score: ScoreKind,
    /// Infidelity sampling settings.
    pub infidelity: InfidelityConfig,
    /// Class whose score is explained and perturbed.
    pub target_class: u8,
}

impl MetricsConfig {
    /// Stock settings for tabular data of the given width.
    pub fn tabular_default(dim: usize) -> Self {
        MetricsConfig {
            steps: 20,
            pc_ranking: RankingRule::SignedDesc,
            dpc_ranking: RankingRule::AbsoluteDesc,
            score: ScoreKind::Probability,
            infidelity: InfidelityConfig::tabular_default(dim),
            target_class: 1,
        }
    }

    /// Stock settings for square images with the given side length.
    pub fn image_default(side: usize) -> Self {
        MetricsConfig {
            steps: 20,
            pc_ranking: RankingRule::SignedDesc,
            dpc_ranking: RankingRule::AbsoluteDesc,
            score: ScoreKind::Probability,
            infidelity: InfidelityConfig::image_default(side),
            target_class: 1,
        }
    }
}

/// Data an attribution method may need beyond the sample itself.
#[derive(Clone, Copy)]
pub struct MethodResources<'a> {
    /// Per-feature training statistics (baseline choices).
    pub stats: &'a FeatureStats,
    /// Training features, the baseline pool for expectation methods.
    pub pool_features: &'a Matrix,
    /// Labels aligned with the pool rows.
    pub pool_labels: &'a [u8],
    /// Image side length when samples are square images.
    pub image_side: Option<usize>,
    /// Per-pixel dataset mean, for image LIME's dataset-mean replacement.
    pub dataset_mean: Option<&'a [f64]>,
}

/// Compute one attribution per its specification.
pub fn compute_attribution(
    spec: &MethodSpec,
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    res: &MethodResources,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    let attr = match spec {
        MethodSpec::Gradient => gradient_attribution(model, x, class)?,
        MethodSpec::GuidedBackprop => guided_backprop_attribution(model, x, class)?,
        MethodSpec::SmoothGrad { sigma, n_samples } => {
            smoothgrad(model, x, class, *sigma, *n_samples, stream)?
        }
        MethodSpec::VarGrad { sigma, n_samples } => {
            vargrad(model, x, class, *sigma, *n_samples, stream)?
        }
        MethodSpec::IntegratedGradients {
            baseline,
            n_steps,
            multiply_by_inputs,
        } => {
            let base = baseline.resolve(res.stats);
            integrated_gradients(
                model,
                x,
                class,
                &base,
                baseline.label(),
                *n_steps,
                *multiply_by_inputs,
            )?
        }
        MethodSpec::LimeTabular(cfg) => lime_tabular(model, x, class, cfg, stream)?,
        MethodSpec::DeepLiftShap {
            mix,
            n_baselines,
            multiply_by_inputs,
        } => {
            let baselines = stratified_baselines(
                res.pool_features,
                res.pool_labels,
                *mix,
                *n_baselines,
                stream,
            )?;
            deepliftshap(model, x, class, &baselines, &mix.label(), *multiply_by_inputs)?
        }
        MethodSpec::Random { constant } => {
            let mut a = random_attribution(x.len(), *constant, stream)?;
            a.target_class = class;
            a
        }
        MethodSpec::LimeImage(cfg) => {
            let side = res
                .image_side
                .context("image LIME needs an image side length")?;
            lime_image(model, x, side, class, cfg, res.dataset_mean, stream)?
        }
        MethodSpec::SobelEdge { post_sigma } => {
            let side = res
                .image_side
                .context("edge attribution needs an image side length")?;
            sobel_edge(x, side, *post_sigma, class)?
        }
    };
    Ok(attr)
}

/// One aggregated sweep result.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    /// Model content hash.
    pub model_id: String,
    /// Evaluation split name.
    pub split: String,
    /// Attribution method name.
    pub method: String,
    /// Canonical hyperparameter string.
    pub params: String,
    /// Short hash of the parameter string.
    pub params_hash: String,
    /// Metric name.
    pub metric: String,
    /// Aggregate name: mean, median, std, min, or max.
    pub aggregate: String,
    /// Aggregated metric value over non-flagged samples.
    pub value: f64,
    /// Perturbed model evaluations the metric consumed across samples.
    pub eval_count: u64,
    /// Samples excluded because the attribution was not finite.
    pub flagged: u64,
    /// Seconds spent in the metric stage; reported, never compared.
    pub wall_time: f64,
}

/// First 16 hex digits of the SHA-256 of a parameter string.
pub fn params_hash(params: &str) -> String {
    let digest = Sha256::digest(params.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Run identity and scope of one sweep.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Model content hash stamped on every record.
    pub model_id: String,
    /// Name of the split being explained.
    pub split: String,
    /// Root seed for all random draws.
    pub seed: u64,
    /// Metrics to compute.
    pub selection: MetricSelection,
    /// Metric settings.
    pub metrics: MetricsConfig,
}

const AGGREGATES: [&str; 5] = ["mean", "median", "std", "min", "max"];

fn aggregate_values(values: &[f64]) -> [f64; 5] {
    if values.is_empty() {
        return [f64::NAN; 5];
    }
    let std = if values.len() < 2 {
        f64::NAN
    } else {
        sample_variance(values).sqrt()
    };
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [mean(values), median(values), std, min, max]
}

struct MetricTally {
    values: Vec<f64>,
    evals: u64,
    seconds: f64,
}

impl MetricTally {
    fn new(capacity: usize) -> Self {
        MetricTally {
            values: Vec::with_capacity(capacity),
            evals: 0,
            seconds: 0.0,
        }
    }
}

/// Run one attribution configuration over every sample and aggregate.
///
/// Returns records in metric order, five aggregates per metric. The model
/// is cloned per call, so evaluation counters never mix across parallel
/// configurations.
pub fn run_spec(
    spec: &MethodSpec,
    model: &ScoringModel,
    samples: &Matrix,
    res: &MethodResources,
    cfg: &SweepConfig,
    cache: Option<&AttributionCache>,
) -> Result<Vec<ResultRecord>> {
    let model = model.clone();
    let params = spec.params_string();
    let p_hash = params_hash(&params);
    let method = spec.method_id();
    let root = RandomStream::new(cfg.seed)
        .fork_str(method)
        .fork_str(&params);
    let class = cfg.metrics.target_class;
    let d = samples.cols();
    let zeros = vec![0.0f64; d];
    let run_level = matches!(spec, MethodSpec::Random { constant: true });

    let want_pc = cfg.selection.includes(Metric::PcAbpc);
    let want_dpc = cfg.selection.includes(Metric::DpcAbpc);
    let want_inf = cfg.selection.includes(Metric::Infidelity);

    let mut pc = MetricTally::new(samples.rows());
    let mut dpc = MetricTally::new(samples.rows());
    let mut inf = MetricTally::new(samples.rows());
    let mut flagged = 0u64;

    let inf_params = format!(
        "{params}|inf_n={};inf_sigma={};inf_k={}",
        cfg.metrics.infidelity.n_perturbations,
        fmt_param(cfg.metrics.infidelity.noise_sigma),
        cfg.metrics.infidelity.subset_size
    );

    let mut run_level_values: Option<Vec<f64>> = None;
    for i in 0..samples.rows() {
        let x = samples.row(i);
        let sample_id = if run_level { RUN_LEVEL_SAMPLE } else { i as u64 };
        let compute = || -> Result<Vec<f64>> {
            let mut stream = if run_level { root.fork_str("run") } else { root.fork(i as u64) };
            Ok(compute_attribution(spec, &model, x, class, res, &mut stream)?.values)
        };
        let computed: Result<Vec<f64>> = match &run_level_values {
            Some(v) => Ok(v.clone()),
            None => {
                let got = match cache {
                    Some(c) => c.vector_or_compute(
                        &CacheKey::new(&cfg.model_id, method, &params, sample_id, cfg.seed),
                        compute,
                    ),
                    None => compute(),
                };
                if run_level {
                    if let Ok(v) = &got {
                        run_level_values = Some(v.clone());
                    }
                }
                got
            }
        };
        // A surrogate fit that degenerates (all kernel weights underflow)
        // yields no usable vector; the sample is flagged like a non-finite
        // attribution instead of killing the sweep.
        let values = match computed {
            Ok(v) => v,
            Err(e)
                if matches!(
                    e.downcast_ref::<faeval_core::error::Error>(),
                    Some(faeval_core::error::Error::IllPosedFit)
                ) =>
            {
                flagged += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let attr = Attribution {
            values,
            method: method.to_string(),
            hyperparams: spec.params(),
            target_class: class,
            flavor: spec.flavor(),
        };
        if !attr.all_finite() {
            flagged += 1;
            continue;
        }

        if want_pc {
            let t0 = Instant::now();
            let pair = run_guided_pair(
                &model,
                x,
                &attr,
                cfg.metrics.steps,
                cfg.metrics.pc_ranking,
                &zeros,
                cfg.metrics.score,
            )?;
            pc.values.push(abpc(&pair.lerf, &pair.morf, MetricKind::Pc)?);
            pc.evals += pair.morf.eval_count + pair.lerf.eval_count;
            pc.seconds += t0.elapsed().as_secs_f64();
        }
        if want_dpc {
            let t0 = Instant::now();
            let pair = run_guided_pair(
                &model,
                x,
                &attr,
                cfg.metrics.steps,
                cfg.metrics.dpc_ranking,
                &zeros,
                cfg.metrics.score,
            )?;
            dpc.values
                .push(abpc(&pair.lerf, &pair.morf, MetricKind::Dpc)?);
            dpc.evals += pair.morf.eval_count + pair.lerf.eval_count;
            dpc.seconds += t0.elapsed().as_secs_f64();
        }
        if want_inf {
            let t0 = Instant::now();
            let compute_pairs = || -> Result<Vec<(f64, f64)>> {
                let mut stream = root.fork(i as u64).fork_str("infidelity");
                Ok(infidelity(
                    &model,
                    x,
                    &attr,
                    &cfg.metrics.infidelity,
                    cfg.metrics.score,
                    &mut stream,
                )?
                .pairs)
            };
            let pairs = match cache {
                Some(c) => c.pairs_or_compute(
                    &CacheKey::new(
                        &cfg.model_id,
                        &format!("{method}+infidelity"),
                        &inf_params,
                        i as u64,
                        cfg.seed,
                    ),
                    compute_pairs,
                )?,
                None => compute_pairs()?,
            };
            inf.values.push(infidelity_from_pairs(&pairs)?);
            inf.evals += pairs.len() as u64;
            inf.seconds += t0.elapsed().as_secs_f64();
        }
    }

    let mut records = Vec::new();
    let mut emit = |metric: Metric, tally: &MetricTally| {
        let aggs = aggregate_values(&tally.values);
        for (name, value) in AGGREGATES.iter().zip(aggs) {
            records.push(ResultRecord {
                model_id: cfg.model_id.clone(),
                split: cfg.split.clone(),
                method: method.to_string(),
                params: params.clone(),
                params_hash: p_hash.clone(),
                metric: metric.name().to_string(),
                aggregate: name.to_string(),
                value,
                eval_count: tally.evals,
                flagged,
                wall_time: tally.seconds,
            });
        }
    };
    if want_pc {
        emit(Metric::PcAbpc, &pc);
    }
    if want_dpc {
        emit(Metric::DpcAbpc, &dpc);
    }
    if want_inf {
        emit(Metric::Infidelity, &inf);
    }
    Ok(records)
}

/// Run a full sweep: every configuration against every sample.
///
/// Configurations run in parallel; records come back in configuration
/// order regardless of scheduling.
pub fn run_sweep(
    model: &ScoringModel,
    samples: &Matrix,
    specs: &[MethodSpec],
    res: &MethodResources,
    cfg: &SweepConfig,
    cache: Option<&AttributionCache>,
) -> Result<Vec<ResultRecord>> {
    let nested: Vec<Vec<ResultRecord>> = specs
        .par_iter()
        .map(|spec| run_spec(spec, model, samples, res, cfg, cache))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

const RESULTS_HEADER: &str =
    "model,split,method,params,params_hash,metric,aggregate,value,eval_count,flagged";

/// Write records as CSV, excluding wall time so equal-seed runs produce
/// byte-identical files.
pub fn write_results_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.model_id,
            r.split,
            r.method,
            quote(&r.params),
            r.params_hash,
            r.metric,
            r.aggregate,
            fmt_param(r.value),
            r.eval_count,
            r.flagged
        ));
    }
    write_bytes(path, out.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

/// Quote a CSV field if it contains a comma or quote.
fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Write per-record wall times; this file is informational and varies
/// between runs.
pub fn write_timings_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut out = String::from("model,split,method,params_hash,metric,aggregate,wall_time_s\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            r.model_id, r.split, r.method, r.params_hash, r.metric, r.aggregate, r.wall_time
        ));
    }
    write_bytes(path, out.as_bytes())
}

/// Read a results CSV back; wall times come back as zero since the
/// deterministic file does not carry them.
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        other => bail!("unexpected results header: {:?}", other),
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields = split_csv(line);
        if fields.len() != 10 {
            bail!("line {}: expected 10 fields, got {}", lineno + 2, fields.len());
        }
        records.push(ResultRecord {
            model_id: fields[0].clone(),
            split: fields[1].clone(),
            method: fields[2].clone(),
            params: fields[3].clone(),
            params_hash: fields[4].clone(),
            metric: fields[5].clone(),
            aggregate: fields[6].clone(),
            value: fields[7].parse().with_context(|| format!("line {}: value", lineno + 2))?,
            eval_count: fields[8]
                .parse()
                .with_context(|| format!("line {}: eval_count", lineno + 2))?,
            flagged: fields[9]
                .parse()
                .with_context(|| format!("line {}: flagged", lineno + 2))?,
            wall_time: 0.0,
        });
    }
    Ok(records)
}

fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if in_quotes => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    in_quotes = false;
                }
            }
            '"' => in_quotes = true,
            ',' if !in_quotes => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Cost comparison between the guided direction-corrected metric and
/// infidelity on one sample.
#[derive(Clone, Debug)]
pub struct CostReport {
    /// Perturbed evaluations for a MoRF and LeRF pair.
    pub curve_evals: u64,
    /// Perturbed evaluations for one infidelity estimate.
    pub infidelity_evals: u64,
    /// Infidelity evaluations per curve evaluation.
    pub ratio: f64,
    /// Seconds for the curve pair.
    pub curve_seconds: f64,
    /// Seconds for the infidelity estimate.
    pub infidelity_seconds: f64,
}

/// Measure both metric costs on one attribution.
pub fn cost_benchmark(
    model: &ScoringModel,
    x: &[f64],
    attr: &Attribution,
    metrics: &MetricsConfig,
    stream: &mut RandomStream,
) -> Result<CostReport> {
    let zeros = vec![0.0; x.len()];
    let t0 = Instant::now();
    let pair = run_guided_pair(
        model,
        x,
        attr,
        metrics.steps,
        metrics.dpc_ranking,
        &zeros,
        metrics.score,
    )?;
    let curve_seconds = t0.elapsed().as_secs_f64();
    let curve_evals = pair.morf.eval_count + pair.lerf.eval_count;

    let t1 = Instant::now();
    let outcome = infidelity(model, x, attr, &metrics.infidelity, metrics.score, stream)?;
    let infidelity_seconds = t1.elapsed().as_secs_f64();

    Ok(CostReport {
        curve_evals,
        infidelity_evals: outcome.perturbed_evals,
        ratio: outcome.perturbed_evals as f64 / curve_evals as f64,
        curve_seconds,
        infidelity_seconds,
    })
}
