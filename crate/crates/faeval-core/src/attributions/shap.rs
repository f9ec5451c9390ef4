//! DeepLiftSHAP: finite-difference rescale contributions averaged over a
//! baseline distribution, plus the stratified baseline sampler.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::attributions::{fmt_param, params_from, Attribution, Flavor};
use crate::error::{dim, invalid, Error, Result};
use crate::math;
use crate::models::backward::deeplift_contributions;
use crate::models::{ScoreKind, ScoringModel};
use crate::numerics::{Matrix, RandomStream};

/// Mean of per-baseline rescale contributions of the class logit.
///
/// With `multiply_by_inputs` each baseline's multipliers are scaled by
/// `x - baseline` before averaging, so the mean inherits per-baseline
/// completeness: the values sum to `s(x)` minus the mean baseline score.
/// Without it, the raw multipliers are averaged and the result reads as a
/// local sensitivity.
///
/// `baseline_label` names the baseline distribution in the hyperparameters.
pub fn deepliftshap(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    baselines: &Matrix,
    baseline_label: &str,
    multiply_by_inputs: bool,
) -> Result<Attribution> {
    if baselines.rows() == 0 {
        return Err(Error::Empty { what: "baseline set" });
    }
    if baselines.cols() != x.len() {
        return Err(dim("baselines", x.len(), baselines.cols()));
    }
    let d = x.len();
    let mut values = vec![0.0; d];
    for b in 0..baselines.rows() {
        let contrib = deeplift_contributions(
            model,
            x,
            baselines.row(b),
            ScoreKind::Logit,
            class,
            multiply_by_inputs,
        )?;
        for (v, c) in values.iter_mut().zip(&contrib) {
            *v += c;
        }
    }
    for v in values.iter_mut() {
        *v /= baselines.rows() as f64;
    }
    Ok(Attribution {
        values,
        method: "deepliftshap".to_string(),
        hyperparams: params_from(&[
            ("baselines", baseline_label.to_string()),
            ("multiply_by_inputs", if multiply_by_inputs { "true" } else { "false" }.to_string()),
            ("n_baselines", baselines.rows().to_string()),
        ]),
        target_class: class,
        flavor: if multiply_by_inputs { Flavor::BaselineOriented } else { Flavor::Local },
    })
}

/// Baseline distribution choice for [`stratified_baselines`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaselineMix {
    /// Rows drawn uniformly from the whole pool.
    Random,
    /// Class mix chosen so the expected label is the given value.
    ExpectedLabel(f64),
}

impl BaselineMix {
    /// Tag for hyperparameter maps: `random` or the expected label value.
    pub fn label(&self) -> String {
        match self {
            BaselineMix::Random => "random".to_string(),
            BaselineMix::ExpectedLabel(y) => fmt_param(*y),
        }
    }
}

/// Draw `n` baseline rows (with replacement) from a labeled pool.
///
/// For an expected label `y`, `round(y * n)` rows come from the class-1
/// pool and the rest from class 0, so the drawn labels average to `y` up
/// to rounding. The rows are drawn per stratum and then order-shuffled by
/// the same stream, keeping the result deterministic in `(pool, mix, n,
/// stream)`.
pub fn stratified_baselines(
    features: &Matrix,
    labels: &[u8],
    mix: BaselineMix,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Matrix> {
    if features.rows() == 0 {
        return Err(Error::Empty { what: "baseline pool" });
    }
    if labels.len() != features.rows() {
        return Err(dim("labels", features.rows(), labels.len()));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one baseline"));
    }
    let rows: Vec<usize> = match mix {
        BaselineMix::Random => (0..n).map(|_| stream.next_index(features.rows())).collect(),
        BaselineMix::ExpectedLabel(y) => {
            if !(0.0..=1.0).contains(&y) {
                return Err(invalid("expected label", "must lie in [0, 1]"));
            }
            let pos: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == 1).collect();
            let neg: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == 0).collect();
            let n_pos = math::round(y * n as f64) as usize;
            if n_pos > 0 && pos.is_empty() {
                return Err(Error::Degenerate { what: "no class-1 rows to draw baselines from" });
            }
            if n_pos < n && neg.is_empty() {
                return Err(Error::Degenerate { what: "no class-0 rows to draw baselines from" });
            }
            let mut idx: Vec<usize> = Vec::with_capacity(n);
            for _ in 0..n_pos {
                idx.push(pos[stream.next_index(pos.len())]);
            }
            for _ in n_pos..n {
                idx.push(neg[stream.next_index(neg.len())]);
            }
            stream.shuffle(&mut idx);
            idx
        }
    };
    features.select_rows(&rows)
}
