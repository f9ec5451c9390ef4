//! Backward passes: exact gradients, guided backpropagation, finite-
//! difference rescale contributions, and a numeric probe.
//!
//! The ReLU derivative is taken as 0 at exactly 0 throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, invalid, Result};
use crate::math;
use crate::models::{ScoreKind, ScoringModel, Trace};

/// Threshold below which a finite difference falls back to the local
/// derivative rule.
const RESCALE_EPS: f64 = 1e-9;

fn head_derivative(z: f64, score: ScoreKind, class: u8) -> f64 {
    let class_sign = if class == 1 { 1.0 } else { -1.0 };
    match score {
        ScoreKind::Logit => class_sign,
        ScoreKind::Probability => {
            let p = math::sigmoid(z);
            class_sign * p * (1.0 - p)
        }
    }
}

fn check_class(class: u8) -> Result<()> {
    if class > 1 {
        return Err(invalid("class", "binary models have classes 0 and 1"));
    }
    Ok(())
}

/// Exact gradient of the selected class score at `x`.
///
/// Uses an internal forward trace; the model's evaluation counter does not
/// move.
pub fn gradient(model: &ScoringModel, x: &[f64], score: ScoreKind, class: u8) -> Result<Vec<f64>> {
    check_class(class)?;
    let trace = model.trace(x)?;
    Ok(backprop(model, &trace, score, class, false))
}

/// Guided backpropagation: like the gradient, but at every ReLU the signal
/// is additionally zeroed where the incoming backward signal is negative.
pub fn guided_backprop(
    model: &ScoringModel,
    x: &[f64],
    score: ScoreKind,
    class: u8,
) -> Result<Vec<f64>> {
    check_class(class)?;
    let trace = model.trace(x)?;
    Ok(backprop(model, &trace, score, class, true))
}

fn backprop(model: &ScoringModel, trace: &Trace, score: ScoreKind, class: u8, guided: bool) -> Vec<f64> {
    let layers = model.layers();
    let mut delta = vec![head_derivative(trace.logit(), score, class)];
    for l in (0..layers.len()).rev() {
        // Pull the signal through layer l's weights.
        let w = &layers[l].weight;
        let mut upstream = vec![0.0; w.cols()];
        for o in 0..w.rows() {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            let row = w.row(o);
            for (u, wv) in upstream.iter_mut().zip(row) {
                *u += d * wv;
            }
        }
        if l == 0 {
            return upstream;
        }
        // Gate through the ReLU that produced layer l's input.
        let pre = &trace.pre[l - 1];
        for (u, &p) in upstream.iter_mut().zip(pre) {
            if p <= 0.0 || (guided && *u <= 0.0) {
                *u = 0.0;
            }
        }
        delta = upstream;
    }
    unreachable!("loop returns at l == 0");
}

/// Finite-difference rescale contributions of `x` against `baseline`.
///
/// Multipliers are propagated backward layer by layer: affine layers use
/// their transposed weights; each nonlinearity uses the ratio of its output
/// change to its input change between the two forward passes, falling back
/// to the local derivative rule when the input change is below `1e-9`. With
/// `multiply_by_inputs` the multipliers are scaled elementwise by
/// `x - baseline`, which makes the values sum exactly to the score
/// difference between `x` and `baseline`.
pub fn deeplift_contributions(
    model: &ScoringModel,
    x: &[f64],
    baseline: &[f64],
    score: ScoreKind,
    class: u8,
    multiply_by_inputs: bool,
) -> Result<Vec<f64>> {
    check_class(class)?;
    if baseline.len() != x.len() {
        return Err(dim("baseline", x.len(), baseline.len()));
    }
    let tx = model.trace(x)?;
    let tb = model.trace(baseline)?;
    let layers = model.layers();
    let class_sign = if class == 1 { 1.0 } else { -1.0 };

    // Head multiplier: finite-difference slope of the score in the logit.
    let (zx, zb) = (tx.logit(), tb.logit());
    let head = match score {
        ScoreKind::Logit => class_sign,
        ScoreKind::Probability => {
            let dz = zx - zb;
            if math::abs(dz) > RESCALE_EPS {
                class_sign * (math::sigmoid(zx) - math::sigmoid(zb)) / dz
            } else {
                let p = math::sigmoid(zx);
                class_sign * p * (1.0 - p)
            }
        }
    };

    let mut mult = vec![head];
    for l in (0..layers.len()).rev() {
        let w = &layers[l].weight;
        let mut upstream = vec![0.0; w.cols()];
        for o in 0..w.rows() {
            let m = mult[o];
            if m == 0.0 {
                continue;
            }
            let row = w.row(o);
            for (u, wv) in upstream.iter_mut().zip(row) {
                *u += m * wv;
            }
        }
        if l == 0 {
            mult = upstream;
            break;
        }
        let pre_x = &tx.pre[l - 1];
        let pre_b = &tb.pre[l - 1];
        let post_x = &tx.post[l - 1];
        let post_b = &tb.post[l - 1];
        for i in 0..upstream.len() {
            let din = pre_x[i] - pre_b[i];
            let ratio = if math::abs(din) > RESCALE_EPS {
                (post_x[i] - post_b[i]) / din
            } else if pre_x[i] > 0.0 {
                1.0
            } else {
                0.0
            };
            upstream[i] *= ratio;
        }
        mult = upstream;
    }

    if multiply_by_inputs {
        for (m, (&xi, &bi)) in mult.iter_mut().zip(x.iter().zip(baseline)) {
            *m *= xi - bi;
        }
    }
    Ok(mult)
}

/// Central finite-difference gradient probe.
///
/// Every probe goes through the counted scoring interface, so this consumes
/// `2 * dim` model evaluations; it exists to validate analytic backward
/// passes, not to be fast.
pub fn finite_difference_gradient(
    model: &ScoringModel,
    x: &[f64],
    score: ScoreKind,
    class: u8,
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("step", "must be positive and finite"));
    }
    let mut out = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let hi = model.class_score(&probe, score, class)?;
        probe[i] = x[i] - step;
        let lo = model.class_score(&probe, score, class)?;
        probe[i] = x[i];
        out[i] = (hi - lo) / (2.0 * step);
    }
    Ok(out)
}
