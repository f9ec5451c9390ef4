//! Default hyperparameter grids for the attribution sweep.
//!
//! A [`MethodSpec`] names one attribution configuration. The grids below
//! enumerate every configuration the stock sweeps run; each spec renders a
//! canonical parameter string that doubles as its cache identity.

use faeval_core::attributions::{fmt_param, Flavor};
use faeval_core::attributions::lime::{LimeImageConfig, LimeTabularConfig, ReplacementRule};
use faeval_core::attributions::shap::BaselineMix;
use faeval_core::numerics::Matrix;
use std::collections::BTreeMap;

/// Reference point used by integrated gradients, resolved against training
/// statistics at sweep time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineChoice {
    /// All-zero vector (the standardized mean).
    Zero,
    /// Per-feature minimum over the training split.
    FeatureMin,
    /// Per-feature median over the training split.
    FeatureMedian,
    /// Per-feature maximum over the training split.
    FeatureMax,
}

impl BaselineChoice {
    /// Stable lowercase tag.
    pub fn label(&self) -> &'static str {
        match self {
            BaselineChoice::Zero => "zero",
            BaselineChoice::FeatureMin => "min",
            BaselineChoice::FeatureMedian => "median",
            BaselineChoice::FeatureMax => "max",
        }
    }

    /// Concrete baseline vector for the given training statistics.
    pub fn resolve(&self, stats: &FeatureStats) -> Vec<f64> {
        match self {
            BaselineChoice::Zero => vec![0.0; stats.min.len()],
            BaselineChoice::FeatureMin => stats.min.clone(),
            BaselineChoice::FeatureMedian => stats.median.clone(),
            BaselineChoice::FeatureMax => stats.max.clone(),
        }
    }
}

/// Per-feature min / median / max over a training split.
#[derive(Clone, Debug)]
pub struct FeatureStats {
    pub min: Vec<f64>,
    pub median: Vec<f64>,
    pub max: Vec<f64>,
}

/// Column statistics of a feature matrix. Median of an even count is the
/// midpoint of the two central order statistics.
pub fn feature_stats(features: &Matrix) -> FeatureStats {
    let (n, d) = (features.rows(), features.cols());
    assert!(n > 0, "feature stats need at least one row");
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    let mut median = vec![0.0; d];
    let mut column = vec![0.0; n];
    for j in 0..d {
        for i in 0..n {
            let v = features.get(i, j);
            column[i] = v;
            if v < min[j] {
                min[j] = v;
            }
            if v > max[j] {
                max[j] = v;
            }
        }
        column.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite features"));
        median[j] = if n % 2 == 1 {
            column[n / 2]
        } else {
            0.5 * (column[n / 2 - 1] + column[n / 2])
        };
    }
    FeatureStats { min, median, max }
}

/// One attribution configuration in a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodSpec {
    Gradient,
    GuidedBackprop,
    SmoothGrad { sigma: f64, n_samples: usize },
    VarGrad { sigma: f64, n_samples: usize },
    IntegratedGradients {
        baseline: BaselineChoice,
        n_steps: usize,
        multiply_by_inputs: bool,
    },
    LimeTabular(LimeTabularConfig),
    DeepLiftShap {
        mix: BaselineMix,
        n_baselines: usize,
        multiply_by_inputs: bool,
    },
    Random { constant: bool },
    LimeImage(LimeImageConfig),
    SobelEdge { post_sigma: f64 },
}

impl MethodSpec {
    /// Stable method name; matches the name stamped on computed attributions.
    pub fn method_id(&self) -> &'static str {
        match self {
            MethodSpec::Gradient => "gradient",
            MethodSpec::GuidedBackprop => "guided-backprop",
            MethodSpec::SmoothGrad { .. } => "smoothgrad",
            MethodSpec::VarGrad { .. } => "vargrad",
            MethodSpec::IntegratedGradients { .. } => "integrated-gradients",
            MethodSpec::LimeTabular(_) => "lime-tabular",
            MethodSpec::DeepLiftShap { .. } => "deepliftshap",
            MethodSpec::Random { .. } => "random",
            MethodSpec::LimeImage(_) => "lime-image",
            MethodSpec::SobelEdge { .. } => "sobel-edge",
        }
    }

    /// Canonical hyperparameter map. Keys are sorted by the map itself, so
    /// [`MethodSpec::params_string`] is deterministic.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match self {
            MethodSpec::Gradient | MethodSpec::GuidedBackprop => {}
            MethodSpec::SmoothGrad { sigma, n_samples }
            | MethodSpec::VarGrad { sigma, n_samples } => {
                put("sigma", fmt_param(*sigma));
                put("n_samples", n_samples.to_string());
            }
            MethodSpec::IntegratedGradients {
                baseline,
                n_steps,
                multiply_by_inputs,
            } => {
                put("baseline", baseline.label().to_string());
                put("n_steps", n_steps.to_string());
                put("multiply_by_inputs", multiply_by_inputs.to_string());
            }
            MethodSpec::LimeTabular(cfg) => {
                put("alpha", fmt_param(cfg.alpha));
                put("sigma_kernel", fmt_param(cfg.sigma_kernel));
                put("sigma_sample", fmt_param(cfg.sigma_sample));
                put("n_samples", cfg.n_samples.to_string());
            }
            MethodSpec::DeepLiftShap {
                mix,
                n_baselines,
                multiply_by_inputs,
            } => {
                put("baselines", mix.label());
                put("n_baselines", n_baselines.to_string());
                put("multiply_by_inputs", multiply_by_inputs.to_string());
            }
            MethodSpec::Random { constant } => {
                put("constant", constant.to_string());
            }
            MethodSpec::LimeImage(cfg) => {
                put("alpha", fmt_param(cfg.alpha));
                put("sigma_kernel", fmt_param(cfg.sigma_kernel));
                put("grid", format!("{}x{}", cfg.grid_rows, cfg.grid_cols));
                put("replacement", cfg.replacement.as_str().to_string());
                put("n_samples", cfg.n_samples.to_string());
            }
            MethodSpec::SobelEdge { post_sigma } => {
                put("post_sigma", fmt_param(*post_sigma));
            }
        }
        m
    }

    /// `key=value` pairs joined with `;`, keys in sorted order.
    pub fn params_string(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.params().iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out
    }

    /// `method[params]` tag for logs and report rows.
    pub fn tag(&self) -> String {
        let p = self.params_string();
        if p.is_empty() {
            self.method_id().to_string()
        } else {
            format!("{}[{}]", self.method_id(), p)
        }
    }

    /// Semantic flavor of the values this configuration produces.
    pub fn flavor(&self) -> Flavor {
        match self {
            MethodSpec::IntegratedGradients {
                multiply_by_inputs, ..
            }
            | MethodSpec::DeepLiftShap {
                multiply_by_inputs, ..
            } if *multiply_by_inputs => Flavor::BaselineOriented,
            _ => Flavor::Local,
        }
    }

    /// Whether the method consumes randomness. Deterministic methods skip
    /// the per-sample stream entirely.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            MethodSpec::SmoothGrad { .. }
                | MethodSpec::VarGrad { .. }
                | MethodSpec::LimeTabular(_)
                | MethodSpec::LimeImage(_)
                | MethodSpec::DeepLiftShap { .. }
                | MethodSpec::Random { .. }
        )
    }
}

/// Ridge penalties for the tabular LIME sweep.
pub const LIME_ALPHAS: [f64; 9] = [
    0.000055, 0.0001, 0.00055, 0.001, 0.0055, 0.01, 0.055, 0.1, 0.55,
];

/// Noise scales shared by SmoothGrad and VarGrad.
pub const SMOOTHING_SIGMAS: [f64; 5] = [0.01, 0.1, 0.25, 0.5, 1.0];

const SMOOTHING_SAMPLES: usize = 64;
const IG_STEPS: usize = 64;

/// Expected-baseline sample count for DeepLift-SHAP on tabular data.
pub const DLS_TABULAR_BASELINES: usize = 1024;

/// Expected-baseline sample count for DeepLift-SHAP on images.
pub const DLS_IMAGE_BASELINES: usize = 128;

/// Every tabular LIME configuration: 9 penalties x 9 kernel widths x
/// 3 sample noise levels x 3 sample counts, 729 in total.
pub fn tabular_lime_grid() -> Vec<LimeTabularConfig> {
    let mut out = Vec::with_capacity(729);
    for &alpha in &LIME_ALPHAS {
        for k in 0..9 {
            let sigma_kernel = 0.25 + 0.125 * k as f64;
            for &sigma_sample in &[0.1, 0.5, 1.0] {
                for &n_samples in &[64usize, 256, 1024] {
                    out.push(LimeTabularConfig {
                        alpha,
                        sigma_kernel,
                        sigma_sample,
                        n_samples,
                    });
                }
            }
        }
    }
    out
}

/// The stock tabular sweep: 775 configurations.
pub fn tabular_grid() -> Vec<MethodSpec> {
    let mut out = Vec::with_capacity(775);
    out.push(MethodSpec::Gradient);
    out.push(MethodSpec::GuidedBackprop);
    for &sigma in &SMOOTHING_SIGMAS {
        out.push(MethodSpec::SmoothGrad {
            sigma,
            n_samples: SMOOTHING_SAMPLES,
        });
    }
    for &sigma in &SMOOTHING_SIGMAS {
        out.push(MethodSpec::VarGrad {
            sigma,
            n_samples: SMOOTHING_SAMPLES,
        });
    }
    for baseline in [
        BaselineChoice::FeatureMin,
        BaselineChoice::Zero,
        BaselineChoice::FeatureMedian,
        BaselineChoice::FeatureMax,
    ] {
        for multiply_by_inputs in [true, false] {
            out.push(MethodSpec::IntegratedGradients {
                baseline,
                n_steps: IG_STEPS,
                multiply_by_inputs,
            });
        }
    }
    for mix in dls_mixes() {
        for multiply_by_inputs in [true, false] {
            out.push(MethodSpec::DeepLiftShap {
                mix,
                n_baselines: DLS_TABULAR_BASELINES,
                multiply_by_inputs,
            });
        }
    }
    for cfg in tabular_lime_grid() {
        out.push(MethodSpec::LimeTabular(cfg));
    }
    out.push(MethodSpec::Random { constant: false });
    out.push(MethodSpec::Random { constant: true });
    out
}

/// Baseline mixes for DeepLift-SHAP: expected labels 0.0 through 1.0 in
/// steps of 0.1, plus an unstratified draw.
pub fn dls_mixes() -> Vec<BaselineMix> {
    let mut mixes: Vec<BaselineMix> = (0..=10)
        .map(|i| BaselineMix::ExpectedLabel(i as f64 / 10.0))
        .collect();
    mixes.push(BaselineMix::Random);
    mixes
}

/// Segment grids used for image LIME on a `side x side` image. Every grid
/// dimension must divide the side.
pub fn image_segment_grids(side: usize) -> Vec<(usize, usize)> {
    [(2, 2), (4, 4), (8, 8), (4, 8)]
        .into_iter()
        .filter(|&(r, c)| r <= side && c <= side && side % r == 0 && side % c == 0)
        .collect()
}

/// Mask budget for a segment count: every mask when the space is small,
/// capped at 128 otherwise.
pub fn image_mask_budget(segments: usize) -> usize {
    if segments >= 7 {
        128
    } else {
        128.min(1usize << segments)
    }
}

/// Every image LIME configuration for a `side x side` image. With all four
/// segment grids available this is 8 penalties x 4 kernel widths x
/// 3 replacement rules x 4 grids, 384 in total.
pub fn image_lime_grid(side: usize) -> Vec<LimeImageConfig> {
    let grids = image_segment_grids(side);
    let mut out = Vec::new();
    for &alpha in &LIME_ALPHAS[..8] {
        for k in 0..4 {
            let sigma_kernel = 0.125 + 0.125 * k as f64;
            for replacement in [
                ReplacementRule::SegmentMean,
                ReplacementRule::ImageMean,
                ReplacementRule::DatasetMean,
            ] {
                for &(grid_rows, grid_cols) in &grids {
                    out.push(LimeImageConfig {
                        alpha,
                        sigma_kernel,
                        n_samples: image_mask_budget(grid_rows * grid_cols),
                        grid_rows,
                        grid_cols,
                        replacement,
                    });
                }
            }
        }
    }
    out
}

/// The stock image sweep: gradient, edge detector, both random baselines,
/// and the full image LIME grid.
pub fn image_grid(side: usize) -> Vec<MethodSpec> {
    let mut out = Vec::new();
    out.push(MethodSpec::Gradient);
    out.push(MethodSpec::SobelEdge { post_sigma: 1.0 });
    out.push(MethodSpec::Random { constant: false });
    out.push(MethodSpec::Random { constant: true });
    for cfg in image_lime_grid(side) {
        out.push(MethodSpec::LimeImage(cfg));
    }
    out
}
