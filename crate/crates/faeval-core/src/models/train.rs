//! AdamW training for the binary classifiers.
//!
//! Deterministic end to end: weight init, epoch shuffling, and noise
//! augmentation all draw from forked counter-based streams, and gradient
//! accumulation follows a fixed order, so one config and seed always
//! produce bit-identical weights.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, invalid, Error, Result};
use crate::math;
use crate::models::{Layer, ModelKind, ScoringModel};
use crate::numerics::{Matrix, RandomStream};

/// Architecture request for the trainer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArchSpec {
    /// Single affine layer.
    Linear,
    /// ReLU MLP with the given hidden widths.
    Mlp {
        /// Hidden layer widths, in order.
        hidden: Vec<usize>,
    },
}

impl ArchSpec {
    /// The default MLP stack used throughout the experiments.
    pub fn default_mlp() -> Self {
        ArchSpec::Mlp { hidden: vec![32, 128, 256, 128, 256, 128, 32] }
    }

    fn kind(&self) -> ModelKind {
        match self {
            ArchSpec::Linear => ModelKind::Linear,
            ArchSpec::Mlp { .. } => ModelKind::Mlp,
        }
    }
}

/// Optimizer and loop settings. `amsgrad` is always on; `augment_sigma`
/// adds Gaussian input noise during training (0 disables).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// AdamW step size.
    pub learning_rate: f64,
    /// Decoupled weight decay.
    pub weight_decay: f64,
    /// Maximum number of epochs.
    pub epochs: usize,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Epochs without validation-AUROC improvement before stopping.
    pub patience: usize,
    /// Standard deviation of training-time input noise.
    pub augment_sigma: f64,
    /// Stream seed for init, shuffling, and augmentation.
    pub seed: u64,
    /// First moment decay.
    pub beta1: f64,
    /// Second moment decay.
    pub beta2: f64,
    /// Denominator fuzz.
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            epochs: 200,
            batch_size: 128,
            patience: 10,
            augment_sigma: 0.05,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Trained model plus the quality numbers from the run.
#[derive(Debug)]
pub struct TrainReport {
    /// Weights restored from the best validation epoch.
    pub model: ScoringModel,
    /// Accuracy on the training split.
    pub train_accuracy: f64,
    /// AUROC on the training split.
    pub train_auroc: f64,
    /// Accuracy on the validation split.
    pub val_accuracy: f64,
    /// AUROC on the validation split.
    pub val_auroc: f64,
    /// Epochs actually run.
    pub epochs_run: usize,
    /// Epoch whose weights were kept (1-based).
    pub best_epoch: usize,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    vmax: Vec<f64>,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], vmax: vec![0.0; n] }
    }
}

fn init_layers(dims: &[usize], stream: &RandomStream) -> Vec<Layer> {
    let mut layers = Vec::new();
    for (l, pair) in dims.windows(2).enumerate() {
        let (inp, out) = (pair[0], pair[1]);
        let bound = math::sqrt(6.0 / inp as f64);
        let mut s = stream.fork_str("init").fork(l as u64);
        let mut w = Matrix::zeros(out, inp);
        for i in 0..out {
            for j in 0..inp {
                w.set(i, j, (2.0 * s.next_f64() - 1.0) * bound);
            }
        }
        layers.push(Layer { weight: w, bias: vec![0.0; out] });
    }
    layers
}

/// Train a classifier with AdamW (amsgrad), logistic loss, and early
/// stopping on validation AUROC. Returns the best-epoch weights.
pub fn train_classifier(
    features: &Matrix,
    labels: &[u8],
    val_features: &Matrix,
    val_labels: &[u8],
    arch: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let n = features.rows();
    let d = features.cols();
    if n == 0 || d == 0 {
        return Err(Error::Empty { what: "training data" });
    }
    if labels.len() != n {
        return Err(dim("labels", n, labels.len()));
    }
    if val_features.cols() != d {
        return Err(dim("validation features", d, val_features.cols()));
    }
    if val_labels.len() != val_features.rows() {
        return Err(dim("validation labels", val_features.rows(), val_labels.len()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(invalid("train config", "batch_size and epochs must be positive"));
    }
    if !(cfg.augment_sigma >= 0.0) {
        return Err(invalid("augment_sigma", "must be non-negative"));
    }

    let mut dims = vec![d];
    if let ArchSpec::Mlp { hidden } = arch {
        if hidden.iter().any(|&h| h == 0) {
            return Err(invalid("architecture", "hidden widths must be positive"));
        }
        dims.extend_from_slice(hidden);
    }
    dims.push(1);

    let root = RandomStream::new(cfg.seed);
    let mut layers = init_layers(&dims, &root);
    let mut opt: Vec<(AdamState, AdamState)> = layers
        .iter()
        .map(|l| (AdamState::new(l.weight.rows() * l.weight.cols()), AdamState::new(l.bias.len())))
        .collect();

    let kind = arch.kind();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best_auroc = f64::NEG_INFINITY;
    let mut best_layers = layers.clone();
    let mut best_epoch = 0usize;
    let mut stale = 0usize;
    let mut epochs_run = 0usize;
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        epochs_run = epoch + 1;
        let mut shuffle_stream = root.fork_str("shuffle").fork(epoch as u64);
        shuffle_stream.shuffle(&mut order);
        let mut noise = root.fork_str("augment").fork(epoch as u64);

        for batch in order.chunks(cfg.batch_size) {
            step += 1;
            let grads = batch_gradients(&layers, features, labels, batch, cfg.augment_sigma, &mut noise)?;
            apply_adamw(&mut layers, &mut opt, &grads, cfg, step);
        }

        let model = ScoringModel::mlp(layers.clone())?;
        let val_scores = batch_logits(&model, val_features)?;
        if val_scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged);
        }
        let auroc = auroc(&val_scores, val_labels)?;
        if auroc > best_auroc + 1e-12 {
            best_auroc = auroc;
            best_layers = layers.clone();
            best_epoch = epoch + 1;
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }

    let model = match kind {
        ModelKind::Linear => {
            let w = best_layers[0].weight.row(0).to_vec();
            ScoringModel::linear(w, best_layers[0].bias[0])?
        }
        ModelKind::Mlp => ScoringModel::mlp(best_layers)?,
    };
    let (train_accuracy, train_auroc) = evaluate_classifier(&model, features, labels)?;
    let (val_accuracy, val_auroc) = evaluate_classifier(&model, val_features, val_labels)?;
    Ok(TrainReport { model, train_accuracy, train_auroc, val_accuracy, val_auroc, epochs_run, best_epoch })
}

/// Per-layer (weight grad, bias grad) averaged over the batch.
fn batch_gradients(
    layers: &[Layer],
    features: &Matrix,
    labels: &[u8],
    batch: &[usize],
    augment_sigma: f64,
    noise: &mut RandomStream,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = layers
        .iter()
        .map(|l| (vec![0.0; l.weight.rows() * l.weight.cols()], vec![0.0; l.bias.len()]))
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let last = layers.len() - 1;

    let mut x = vec![0.0; features.cols()];
    for &idx in batch {
        x.copy_from_slice(features.row(idx));
        if augment_sigma > 0.0 {
            for v in x.iter_mut() {
                *v += augment_sigma * noise.next_gaussian();
            }
        }

        // Forward, keeping activations.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        acts.push(x.clone());
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let mut z = layer.weight.matvec(acts.last().expect("non-empty"))?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            let a: Vec<f64> = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
            };
            pres.push(z);
            acts.push(a);
        }
        let logit = acts[layers.len()][0];
        let y = labels[idx] as f64;
        let loss = math::bce_with_logit(logit, y);
        if !loss.is_finite() {
            return Err(Error::Diverged);
        }

        // Backward.
        let mut delta = vec![(math::sigmoid(logit) - y) * scale];
        for l in (0..layers.len()).rev() {
            let (gw, gb) = &mut grads[l];
            let input = &acts[l];
            let cols = layers[l].weight.cols();
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                gb[o] += dv;
                let row = &mut gw[o * cols..(o + 1) * cols];
                for (g, &iv) in row.iter_mut().zip(input) {
                    *g += dv * iv;
                }
            }
            if l == 0 {
                break;
            }
            let w = &layers[l].weight;
            let mut upstream = vec![0.0; cols];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                for (u, wv) in upstream.iter_mut().zip(w.row(o)) {
                    *u += dv * wv;
                }
            }
            for (u, &p) in upstream.iter_mut().zip(&pres[l - 1]) {
                if p <= 0.0 {
                    *u = 0.0;
                }
            }
            delta = upstream;
        }
    }
    Ok(grads)
}

fn apply_adamw(
    layers: &mut [Layer],
    opt: &mut [(AdamState, AdamState)],
    grads: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
    step: u64,
) {
    let bc1 = 1.0 - pow_scalar(cfg.beta1, step);
    let bc2 = 1.0 - pow_scalar(cfg.beta2, step);
    for (l, layer) in layers.iter_mut().enumerate() {
        let (wstate, bstate) = &mut opt[l];
        let (gw, gb) = &grads[l];
        let cols = layer.weight.cols();
        for (i, &g) in gw.iter().enumerate() {
            let p = layer.weight.get(i / cols, i % cols);
            let updated = adamw_scalar(p, g, wstate, i, cfg, bc1, bc2, true);
            layer.weight.set(i / cols, i % cols, updated);
        }
        for (i, &g) in gb.iter().enumerate() {
            layer.bias[i] = adamw_scalar(layer.bias[i], g, bstate, i, cfg, bc1, bc2, false);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adamw_scalar(
    p: f64,
    g: f64,
    state: &mut AdamState,
    i: usize,
    cfg: &TrainConfig,
    bc1: f64,
    bc2: f64,
    decay: bool,
) -> f64 {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    let vhat = state.v[i] / bc2;
    if vhat > state.vmax[i] {
        state.vmax[i] = vhat;
    }
    let mhat = state.m[i] / bc1;
    let mut out = p - cfg.learning_rate * mhat / (math::sqrt(state.vmax[i]) + cfg.eps);
    if decay {
        out -= cfg.learning_rate * cfg.weight_decay * p;
    }
    out
}

fn pow_scalar(base: f64, exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// Uncounted logits for every row; used for split-level quality numbers.
pub fn batch_logits(model: &ScoringModel, features: &Matrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(features.rows());
    for i in 0..features.rows() {
        out.push(model.trace(features.row(i))?.logit());
    }
    Ok(out)
}

/// (accuracy, AUROC) of a model over a labeled split. Stays off the
/// evaluation counter.
pub fn evaluate_classifier(
    model: &ScoringModel,
    features: &Matrix,
    labels: &[u8],
) -> Result<(f64, f64)> {
    if features.rows() != labels.len() {
        return Err(dim("labels", features.rows(), labels.len()));
    }
    let scores = batch_logits(model, features)?;
    let acc = accuracy(&scores, labels)?;
    let auc = auroc(&scores, labels)?;
    Ok((acc, auc))
}

/// Fraction of rows where `score > 0` matches the label.
pub fn accuracy(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(dim("labels", scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(Error::Empty { what: "scores" });
    }
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, &y)| (**s > 0.0) == (y == 1))
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Tie-aware AUROC via the rank statistic.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(dim("labels", scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate { what: "single-class labels have no AUROC" });
    }
    let ranks = crate::stats::average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| *r)
        .sum();
    Ok((rank_sum - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64))
}
