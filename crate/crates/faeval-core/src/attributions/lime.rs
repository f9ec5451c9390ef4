//! LIME surrogates for tabular and image inputs.
//!
//! Both variants fit a weighted ridge surrogate to the model's class
//! probability on locally perturbed inputs and return the surrogate slope.
//! The intercept is fitted but never penalized and never reported.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::attributions::{fmt_param, params_from, Attribution, Flavor};
use crate::error::{dim, invalid, Error, Result};
use crate::math;
use crate::models::{ScoreKind, ScoringModel};
use crate::numerics::rng::{gaussian_vector, RandomStream};
use crate::numerics::{ridge_fit, Matrix, RidgeFit};

/// Diagonal jitter used to rescue an ill-posed unpenalized surrogate fit.
const FALLBACK_JITTER: f64 = 1e-12;

/// Tabular LIME settings.
#[derive(Clone, Debug, PartialEq)]
pub struct LimeTabularConfig {
    /// Ridge penalty on the surrogate slope.
    pub alpha: f64,
    /// Kernel width: sample weight is `exp(-dist^2 / sigma_kernel^2)`.
    pub sigma_kernel: f64,
    /// Standard deviation of the Gaussian input perturbations.
    pub sigma_sample: f64,
    /// Number of perturbed samples.
    pub n_samples: usize,
}

impl LimeTabularConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be finite and non-negative"));
        }
        if !(self.sigma_kernel > 0.0) {
            return Err(invalid("sigma_kernel", "must be positive"));
        }
        if !(self.sigma_sample > 0.0) {
            return Err(invalid("sigma_sample", "must be positive"));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "need at least one perturbed sample"));
        }
        Ok(())
    }
}

fn surrogate_fit(
    designs: &Matrix,
    targets: &[f64],
    weights: &[f64],
    alpha: f64,
) -> Result<RidgeFit> {
    match ridge_fit(designs, targets, weights, alpha) {
        Err(Error::IllPosedFit) if alpha == 0.0 => {
            ridge_fit(designs, targets, weights, FALLBACK_JITTER)
        }
        other => other,
    }
}

/// Tabular LIME: Gaussian perturbations around `x`, class-probability
/// targets, distance-kernel weights, ridge slope as the attribution.
///
/// Probability lookups go through the counted scoring interface, so one
/// call consumes `n_samples` model evaluations.
pub fn lime_tabular(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    cfg: &LimeTabularConfig,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    cfg.validate()?;
    if x.len() != model.input_dim() {
        return Err(dim("input", model.input_dim(), x.len()));
    }
    let d = x.len();
    let n = cfg.n_samples;
    let mut design = Matrix::zeros(n, d);
    let mut targets = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut probe = vec![0.0; d];
    for i in 0..n {
        let eps = gaussian_vector(stream, d, cfg.sigma_sample)?;
        let mut dist2 = 0.0;
        for j in 0..d {
            design.set(i, j, eps[j]);
            probe[j] = x[j] + eps[j];
            dist2 += eps[j] * eps[j];
        }
        targets[i] = model.class_score(&probe, ScoreKind::Probability, class)?;
        weights[i] = math::exp(-dist2 / (cfg.sigma_kernel * cfg.sigma_kernel));
    }
    let fit = surrogate_fit(&design, &targets, &weights, cfg.alpha)?;
    Ok(Attribution {
        values: fit.weights,
        method: "lime-tabular".to_string(),
        hyperparams: params_from(&[
            ("alpha", fmt_param(cfg.alpha)),
            ("n_samples", cfg.n_samples.to_string()),
            ("sigma_kernel", fmt_param(cfg.sigma_kernel)),
            ("sigma_sample", fmt_param(cfg.sigma_sample)),
        ]),
        target_class: class,
        flavor: Flavor::Local,
    })
}

/// What replaces a masked-off segment in image LIME.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplacementRule {
    /// Mean of the segment's own pixels.
    SegmentMean,
    /// Mean over the whole image.
    ImageMean,
    /// Per-pixel mean over a reference dataset (supplied separately).
    DatasetMean,
}

impl ReplacementRule {
    /// Stable lowercase name.
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplacementRule::SegmentMean => "segment-mean",
            ReplacementRule::ImageMean => "image-mean",
            ReplacementRule::DatasetMean => "dataset-mean",
        }
    }
}

/// Image LIME settings; segmentation is a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LimeImageConfig {
    /// Ridge penalty on the surrogate slope.
    pub alpha: f64,
    /// Kernel width over the normalized mask Hamming distance.
    pub sigma_kernel: f64,
    /// Number of sampled masks; all masks are distinct.
    pub n_samples: usize,
    /// Grid rows.
    pub grid_rows: usize,
    /// Grid columns.
    pub grid_cols: usize,
    /// Fill rule for masked-off segments.
    pub replacement: ReplacementRule,
}

impl LimeImageConfig {
    fn validate(&self, side: usize) -> Result<usize> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be finite and non-negative"));
        }
        if !(self.sigma_kernel > 0.0) {
            return Err(invalid("sigma_kernel", "must be positive"));
        }
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(invalid("grid", "needs at least one row and column"));
        }
        if side == 0 || side % self.grid_rows != 0 || side % self.grid_cols != 0 {
            return Err(invalid("grid", "cell layout must cover the image exactly"));
        }
        let segments = self.grid_rows * self.grid_cols;
        if segments > 128 {
            return Err(Error::TooLarge { what: "segment count", limit: 128, got: segments });
        }
        if self.n_samples < segments {
            return Err(invalid("n_samples", "need at least one sample per segment"));
        }
        if segments < usize::BITS as usize && self.n_samples > (1usize << segments) {
            return Err(invalid("n_samples", "more samples than distinct masks exist"));
        }
        Ok(segments)
    }

    /// `rows x cols` tag for hyperparameter maps.
    pub fn grid_string(&self) -> String {
        let mut s = String::new();
        core::fmt::write(&mut s, format_args!("{}x{}", self.grid_rows, self.grid_cols))
            .expect("formatting into a String");
        s
    }
}

/// Segment index of a pixel under a grid layout.
fn segment_of(pixel: usize, side: usize, rows: usize, cols: usize) -> usize {
    let py = pixel / side;
    let px = pixel % side;
    (py / (side / rows)) * cols + px / (side / cols)
}

/// Draw `n` distinct segment masks (bit set = segment kept).
pub(crate) fn sample_distinct_masks(
    stream: &mut RandomStream,
    n: usize,
    segments: usize,
) -> Vec<u128> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut mask = 0u128;
        for s in 0..segments {
            if stream.next_f64() < 0.5 {
                mask |= 1u128 << s;
            }
        }
        if seen.insert(mask) {
            out.push(mask);
        }
    }
    out
}

/// Image LIME: distinct random segment masks, replacement-filled images,
/// class-probability targets, kernel weights on the normalized Hamming
/// distance, ridge slope per segment broadcast back to pixels.
pub fn lime_image(
    model: &ScoringModel,
    image: &[f64],
    side: usize,
    class: u8,
    cfg: &LimeImageConfig,
    dataset_mean: Option<&[f64]>,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    let segments = cfg.validate(side)?;
    if image.len() != side * side {
        return Err(dim("image", side * side, image.len()));
    }
    if image.len() != model.input_dim() {
        return Err(dim("input", model.input_dim(), image.len()));
    }

    // Per-pixel fill values for masked-off segments.
    let fill: Vec<f64> = match cfg.replacement {
        ReplacementRule::SegmentMean => {
            let mut sums = vec![0.0; segments];
            let mut counts = vec![0usize; segments];
            for (p, &v) in image.iter().enumerate() {
                let s = segment_of(p, side, cfg.grid_rows, cfg.grid_cols);
                sums[s] += v;
                counts[s] += 1;
            }
            (0..image.len())
                .map(|p| {
                    let s = segment_of(p, side, cfg.grid_rows, cfg.grid_cols);
                    sums[s] / counts[s] as f64
                })
                .collect()
        }
        ReplacementRule::ImageMean => {
            let m = crate::numerics::mean(image);
            vec![m; image.len()]
        }
        ReplacementRule::DatasetMean => {
            let stats = dataset_mean.ok_or_else(|| {
                invalid("replacement", "dataset-mean replacement needs dataset statistics")
            })?;
            if stats.len() != image.len() {
                return Err(dim("dataset mean", image.len(), stats.len()));
            }
            stats.to_vec()
        }
    };

    let masks = sample_distinct_masks(stream, cfg.n_samples, segments);
    let n = masks.len();
    let mut design = Matrix::zeros(n, segments);
    let mut targets = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut probe = vec![0.0; image.len()];
    for (i, &mask) in masks.iter().enumerate() {
        let mut off = 0usize;
        for s in 0..segments {
            if mask >> s & 1 == 1 {
                design.set(i, s, 1.0);
            } else {
                off += 1;
            }
        }
        for (p, v) in probe.iter_mut().enumerate() {
            let s = segment_of(p, side, cfg.grid_rows, cfg.grid_cols);
            *v = if mask >> s & 1 == 1 { image[p] } else { fill[p] };
        }
        targets[i] = model.class_score(&probe, ScoreKind::Probability, class)?;
        let dist = off as f64 / segments as f64;
        weights[i] = math::exp(-(dist * dist) / (cfg.sigma_kernel * cfg.sigma_kernel));
    }
    let fit = surrogate_fit(&design, &targets, &weights, cfg.alpha)?;

    let values: Vec<f64> = (0..image.len())
        .map(|p| fit.weights[segment_of(p, side, cfg.grid_rows, cfg.grid_cols)])
        .collect();
    Ok(Attribution {
        values,
        method: "lime-image".to_string(),
        hyperparams: params_from(&[
            ("alpha", fmt_param(cfg.alpha)),
            ("grid", cfg.grid_string()),
            ("n_samples", cfg.n_samples.to_string()),
            ("replacement", cfg.replacement.as_str().to_string()),
            ("sigma_kernel", fmt_param(cfg.sigma_kernel)),
        ]),
        target_class: class,
        flavor: Flavor::Local,
    })
}
