//! Gradient-family explainers: plain gradient, guided backpropagation,
//! SmoothGrad, VarGrad, and integrated gradients.
//!
//! All of them explain the class logit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::attributions::{fmt_param, params_from, Attribution, Flavor};
use crate::error::{dim, invalid, Result};
use crate::models::backward;
use crate::models::{ScoreKind, ScoringModel};
use crate::numerics::rng::{gaussian_vector, RandomStream};

/// Raw gradient of the class logit.
pub fn gradient_attribution(model: &ScoringModel, x: &[f64], class: u8) -> Result<Attribution> {
    let values = backward::gradient(model, x, ScoreKind::Logit, class)?;
    Ok(Attribution {
        values,
        method: "gradient".to_string(),
        hyperparams: Default::default(),
        target_class: class,
        flavor: Flavor::Local,
    })
}

/// Guided backpropagation of the class logit.
pub fn guided_backprop_attribution(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
) -> Result<Attribution> {
    let values = backward::guided_backprop(model, x, ScoreKind::Logit, class)?;
    Ok(Attribution {
        values,
        method: "guided-backprop".to_string(),
        hyperparams: Default::default(),
        target_class: class,
        flavor: Flavor::Local,
    })
}

fn noisy_gradients(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    sigma: f64,
    n_samples: usize,
    stream: &mut RandomStream,
) -> Result<Vec<Vec<f64>>> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "need at least one sample"));
    }
    let mut grads = Vec::with_capacity(n_samples);
    let mut probe = vec![0.0; x.len()];
    for _ in 0..n_samples {
        let noise = gaussian_vector(stream, x.len(), sigma)?;
        for i in 0..x.len() {
            probe[i] = x[i] + noise[i];
        }
        grads.push(backward::gradient(model, &probe, ScoreKind::Logit, class)?);
    }
    Ok(grads)
}

/// Mean logit gradient under `N(x, sigma^2 I)` input noise.
pub fn smoothgrad(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    sigma: f64,
    n_samples: usize,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    let grads = noisy_gradients(model, x, class, sigma, n_samples, stream)?;
    let mut values = vec![0.0; x.len()];
    for g in &grads {
        for (v, gi) in values.iter_mut().zip(g) {
            *v += gi;
        }
    }
    for v in values.iter_mut() {
        *v /= n_samples as f64;
    }
    Ok(Attribution {
        values,
        method: "smoothgrad".to_string(),
        hyperparams: params_from(&[
            ("n_samples", n_samples.to_string()),
            ("sigma", fmt_param(sigma)),
        ]),
        target_class: class,
        flavor: Flavor::Local,
    })
}

/// Per-coordinate unbiased variance of the logit gradient under
/// `N(x, sigma^2 I)` input noise. Needs at least two samples.
pub fn vargrad(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    sigma: f64,
    n_samples: usize,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    if n_samples < 2 {
        return Err(invalid("n_samples", "variance needs at least two samples"));
    }
    let grads = noisy_gradients(model, x, class, sigma, n_samples, stream)?;
    let d = x.len();
    let mut mean = vec![0.0; d];
    for g in &grads {
        for (m, gi) in mean.iter_mut().zip(g) {
            *m += gi;
        }
    }
    for m in mean.iter_mut() {
        *m /= n_samples as f64;
    }
    let mut values = vec![0.0; d];
    for g in &grads {
        for i in 0..d {
            let dlt = g[i] - mean[i];
            values[i] += dlt * dlt;
        }
    }
    for v in values.iter_mut() {
        *v /= (n_samples - 1) as f64;
    }
    Ok(Attribution {
        values,
        method: "vargrad".to_string(),
        hyperparams: params_from(&[
            ("n_samples", n_samples.to_string()),
            ("sigma", fmt_param(sigma)),
        ]),
        target_class: class,
        flavor: Flavor::Local,
    })
}

/// Integrated gradients along the straight path from `baseline` to `x`,
/// midpoint rule with `n_steps` gradient evaluations.
///
/// With `multiply_by_inputs` on, the averaged path gradient is scaled by
/// `x - baseline` (the path integral proper, baseline-oriented). Off, the
/// raw averaged path gradient is returned, which behaves like a smoothed
/// local slope.
///
/// `baseline_label` names the baseline in the hyperparameters; pass the
/// short tag the baseline was built from (`zero`, `min`, ...).
pub fn integrated_gradients(
    model: &ScoringModel,
    x: &[f64],
    class: u8,
    baseline: &[f64],
    baseline_label: &str,
    n_steps: usize,
    multiply_by_inputs: bool,
) -> Result<Attribution> {
    if baseline.len() != x.len() {
        return Err(dim("baseline", x.len(), baseline.len()));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "need at least one quadrature step"));
    }
    let d = x.len();
    let mut avg = vec![0.0; d];
    let mut point = vec![0.0; d];
    for j in 0..n_steps {
        let t = (j as f64 + 0.5) / n_steps as f64;
        for i in 0..d {
            point[i] = baseline[i] + t * (x[i] - baseline[i]);
        }
        let g = backward::gradient(model, &point, ScoreKind::Logit, class)?;
        for (a, gi) in avg.iter_mut().zip(&g) {
            *a += gi;
        }
    }
    for a in avg.iter_mut() {
        *a /= n_steps as f64;
    }
    if multiply_by_inputs {
        for i in 0..d {
            avg[i] *= x[i] - baseline[i];
        }
    }
    Ok(Attribution {
        values: avg,
        method: "integrated-gradients".to_string(),
        hyperparams: params_from(&[
            ("baseline", baseline_label.to_string()),
            ("multiply_by_inputs", if multiply_by_inputs { "true" } else { "false" }.to_string()),
            ("n_steps", n_steps.to_string()),
        ]),
        target_class: class,
        flavor: if multiply_by_inputs { Flavor::BaselineOriented } else { Flavor::Local },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Layer, ScoringModel};
    use crate::numerics::{Matrix, RandomStream};

    fn linear(w: &[f64], b: f64) -> ScoringModel {
        ScoringModel::linear(w.to_vec(), b).unwrap()
    }

    fn relu_unit() -> ScoringModel {
        // s(x) = relu(x), one input.
        let l1 = Layer::new(Matrix::from_rows(&[alloc::vec![1.0]]).unwrap(), alloc::vec![0.0]).unwrap();
        let l2 = Layer::new(Matrix::from_rows(&[alloc::vec![1.0]]).unwrap(), alloc::vec![0.0]).unwrap();
        ScoringModel::mlp(alloc::vec![l1, l2]).unwrap()
    }

    #[test]
    fn gradient_attribution_on_linear_model_is_the_weights() {
        let m = linear(&[2.0, -1.5, 0.0], 3.0);
        let a = gradient_attribution(&m, &[5.0, 5.0, 5.0], 1).unwrap();
        assert_eq!(a.values, alloc::vec![2.0, -1.5, 0.0]);
        assert_eq!(a.method, "gradient");
        assert_eq!(a.flavor, Flavor::Local);
        let a0 = gradient_attribution(&m, &[5.0, 5.0, 5.0], 0).unwrap();
        assert_eq!(a0.values, alloc::vec![-2.0, 1.5, 0.0]);
    }

    /// On a linear model noise averages out exactly in expectation; with a
    /// constant gradient every noisy draw is identical.
    #[test]
    fn smoothgrad_on_linear_model_equals_gradient() {
        let m = linear(&[1.0, -2.0], 0.0);
        let mut s = RandomStream::new(1);
        let a = smoothgrad(&m, &[0.3, 0.4], 1, 0.5, 16, &mut s).unwrap();
        assert_eq!(a.values, alloc::vec![1.0, -2.0]);
    }

    /// MC average converges at the 1/sqrt(n) rate: the seed-to-seed spread
    /// of a 512-sample estimate is well under half the spread at 32.
    #[test]
    fn smoothgrad_variance_shrinks_with_sample_count() {
        let mut init = RandomStream::new(400);
        let mut layers = alloc::vec::Vec::new();
        for pair in [(3usize, 8usize), (8, 1)] {
            let mut w = Matrix::zeros(pair.1, pair.0);
            for i in 0..pair.1 {
                for j in 0..pair.0 {
                    w.set(i, j, init.next_gaussian());
                }
            }
            let b: alloc::vec::Vec<f64> = (0..pair.1).map(|_| 0.1 * init.next_gaussian()).collect();
            layers.push(Layer::new(w, b).unwrap());
        }
        let m = ScoringModel::mlp(layers).unwrap();
        let x = [0.2, -0.4, 0.9];
        let spread = |n: usize| -> f64 {
            let mut total = 0.0;
            for pair in 0..8u64 {
                let a = smoothgrad(&m, &x, 1, 0.4, n, &mut RandomStream::new(2 * pair)).unwrap();
                let b = smoothgrad(&m, &x, 1, 0.4, n, &mut RandomStream::new(2 * pair + 1)).unwrap();
                total += a
                    .values
                    .iter()
                    .zip(&b.values)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt();
            }
            total / 8.0
        };
        let wide = spread(32);
        let narrow = spread(512);
        // Expected ratio 1/4; allow generous slack.
        assert!(narrow < 0.5 * wide, "spread at 512: {narrow}, at 32: {wide}");
    }

    #[test]
    fn vargrad_is_zero_for_linear_and_positive_at_a_kink() {
        let m = linear(&[3.0, 1.0], 0.0);
        let mut s = RandomStream::new(2);
        let a = vargrad(&m, &[0.0, 0.0], 1, 0.3, 32, &mut s).unwrap();
        assert_eq!(a.values, alloc::vec![0.0, 0.0]);

        // At the kink of relu the noisy gradient is Bernoulli(1/2) with
        // variance 1/4.
        let relu = relu_unit();
        let mut s2 = RandomStream::new(3);
        let v = vargrad(&relu, &[0.0], 1, 0.5, 4096, &mut s2).unwrap();
        assert!(
            (v.values[0] - 0.25).abs() < 0.02,
            "variance at the kink: {}",
            v.values[0]
        );
        let mut s3 = RandomStream::new(4);
        assert!(vargrad(&relu, &[0.0], 1, 0.5, 1, &mut s3).is_err());
    }

    /// Midpoint quadrature oracle: for s(x) = relu(x) from baseline 0 the
    /// exact path integral is x for x > 0, and the integrand is constant 1
    /// along the open path, so even one step is exact.
    #[test]
    fn integrated_gradients_against_quadrature_oracle() {
        let relu = relu_unit();
        for &steps in &[1usize, 4, 64] {
            let a = integrated_gradients(&relu, &[2.0], 1, &[0.0], "zero", steps, true).unwrap();
            assert!((a.values[0] - 2.0).abs() < 1e-12, "steps {steps}: {}", a.values[0]);
        }
        // Crossing the kink: path from -1 to 3 has gradient 0 on the first
        // quarter and 1 after, so the integral is relu(3) - relu(-1) = 3.
        for &steps in &[64usize, 256] {
            let a = integrated_gradients(&relu, &[3.0], 1, &[-1.0], "custom", steps, true).unwrap();
            assert!(
                (a.values[0] - 3.0).abs() < 4.0 / steps as f64 + 1e-9,
                "steps {steps}: {}",
                a.values[0]
            );
        }
    }

    /// Completeness on smooth-enough paths: values sum to the logit
    /// difference between input and baseline.
    #[test]
    fn integrated_gradients_completeness_on_linear_model() {
        let m = linear(&[1.0, -2.0, 0.5], 0.7);
        let x = [2.0, 1.0, -1.0];
        let b = [0.5, 0.5, 0.5];
        let a = integrated_gradients(&m, &x, 1, &b, "custom", 64, true).unwrap();
        let total: f64 = a.values.iter().sum();
        let m_ref = &m;
        let sx = m_ref.forward_score(&x, ScoreKind::Logit).unwrap();
        let sb = m_ref.forward_score(&b, ScoreKind::Logit).unwrap();
        assert!((total - (sx - sb)).abs() < 1e-12);
        assert_eq!(a.flavor, Flavor::BaselineOriented);
    }

    /// With the multiplier off, the result is the plain averaged path
    /// gradient: dividing the on-values by (x - baseline) elementwise
    /// recovers it wherever the delta is nonzero.
    #[test]
    fn multiply_flag_relates_the_two_variants_elementwise() {
        let m = linear(&[1.5, -0.5], 0.0);
        let x = [2.0, -3.0];
        let b = [0.0, 1.0];
        let on = integrated_gradients(&m, &x, 1, &b, "custom", 32, true).unwrap();
        let off = integrated_gradients(&m, &x, 1, &b, "custom", 32, false).unwrap();
        assert_eq!(off.flavor, Flavor::Local);
        for i in 0..2 {
            assert!((on.values[i] / (x[i] - b[i]) - off.values[i]).abs() < 1e-12);
        }
        // On a linear model the averaged path gradient is the gradient.
        assert_eq!(off.values, alloc::vec![1.5, -0.5]);
    }

    #[test]
    fn integrated_gradients_none_of_the_forwards_count() {
        let m = linear(&[1.0], 0.0);
        m.reset_eval_count();
        integrated_gradients(&m, &[1.0], 1, &[0.0], "zero", 64, true).unwrap();
        smoothgrad(&m, &[1.0], 1, 0.1, 8, &mut RandomStream::new(0)).unwrap();
        assert_eq!(m.eval_count(), 0);
    }

    #[test]
    fn validation_errors() {
        let m = linear(&[1.0, 1.0], 0.0);
        let mut s = RandomStream::new(0);
        assert!(integrated_gradients(&m, &[1.0, 1.0], 1, &[0.0], "zero", 64, true).is_err());
        assert!(integrated_gradients(&m, &[1.0, 1.0], 1, &[0.0, 0.0], "zero", 0, true).is_err());
        assert!(smoothgrad(&m, &[1.0, 1.0], 1, 0.1, 0, &mut s).is_err());
        assert!(smoothgrad(&m, &[1.0, 1.0], 1, -0.1, 4, &mut s).is_err());
        assert!(vargrad(&m, &[1.0, 1.0], 1, 0.0, 4, &mut s).is_err());
    }
}
