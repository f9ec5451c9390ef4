//! Perturbation-regression infidelity and its subsample uncertainty.

use alloc::vec::Vec;

use crate::attributions::Attribution;
use crate::error::{dim, invalid, Error, Result};
use crate::models::{ScoreKind, ScoringModel};
use crate::numerics::rng::RandomStream;
use crate::numerics::{mean, sample_variance};

/// Infidelity sampling settings.
#[derive(Clone, Debug, PartialEq)]
pub struct InfidelityConfig {
    /// Number of random perturbations.
    pub n_perturbations: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sigma: f64,
    /// How many features each perturbation touches (without replacement).
    pub subset_size: usize,
}

impl InfidelityConfig {
    /// Tabular defaults: 1280 draws, noise 0.2, half the features per draw.
    pub fn tabular_default(dim: usize) -> Self {
        InfidelityConfig {
            n_perturbations: 1280,
            noise_sigma: 0.2,
            subset_size: dim.div_ceil(2).max(1),
        }
    }

    /// Image defaults: 640 draws, noise 0.2, a sixteenth of the pixels.
    pub fn image_default(side: usize) -> Self {
        InfidelityConfig {
            n_perturbations: 640,
            noise_sigma: 0.2,
            subset_size: (side * side / 16).max(1),
        }
    }
}

/// Value plus the raw regression pairs behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct InfidelityOutcome {
    /// Mean squared gap between predicted and observed effect.
    pub value: f64,
    /// One `(predicted, observed)` pair per perturbation.
    pub pairs: Vec<(f64, f64)>,
    /// Counted model evaluations spent on perturbed inputs (excludes the
    /// single unperturbed evaluation).
    pub perturbed_evals: u64,
}

/// Mean squared difference over stored `(predicted, observed)` pairs.
pub fn infidelity_from_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty { what: "infidelity pairs" });
    }
    Ok(pairs.iter().map(|(p, s)| (p - s) * (p - s)).sum::<f64>() / pairs.len() as f64)
}

/// Perturbation-based infidelity of one attribution.
///
/// Each draw picks `subset_size` distinct features, adds Gaussian noise to
/// them, and compares the attribution's predicted score effect
/// `(x - x_pert) . a` against the observed change `s(x) - s(x_pert)`; the
/// result is the mean squared gap. The raw pairs are returned so
/// uncertainty analyses can resample them without touching the model
/// again.
///
/// Consumes `n_perturbations + 1` counted evaluations: one for the
/// unperturbed score, one per draw.
pub fn infidelity(
    model: &ScoringModel,
    x: &[f64],
    attr: &Attribution,
    cfg: &InfidelityConfig,
    score: ScoreKind,
    stream: &mut RandomStream,
) -> Result<InfidelityOutcome> {
    let d = model.input_dim();
    if x.len() != d {
        return Err(dim("input", d, x.len()));
    }
    if attr.dim() != d {
        return Err(dim("attribution", d, attr.dim()));
    }
    if cfg.n_perturbations == 0 {
        return Err(invalid("n_perturbations", "need at least one draw"));
    }
    if cfg.subset_size == 0 || cfg.subset_size > d {
        return Err(invalid("subset_size", "must lie in 1..=dim"));
    }
    if !(cfg.noise_sigma > 0.0) || !cfg.noise_sigma.is_finite() {
        return Err(invalid("noise_sigma", "must be positive and finite"));
    }

    let s_x = model.class_score(x, score, attr.target_class)?;
    let before = model.eval_count();
    let mut pairs = Vec::with_capacity(cfg.n_perturbations);
    let mut perturbed = x.to_vec();
    for _ in 0..cfg.n_perturbations {
        let subset = stream.sample_without_replacement(d, cfg.subset_size)?;
        let mut predicted = 0.0;
        for &i in &subset {
            let eta = cfg.noise_sigma * stream.next_gaussian();
            perturbed[i] = x[i] + eta;
            // x - x_pert = -eta on the touched coordinates.
            predicted -= eta * attr.values[i];
        }
        let s_p = model.class_score(&perturbed, score, attr.target_class)?;
        pairs.push((predicted, s_x - s_p));
        for &i in &subset {
            perturbed[i] = x[i];
        }
    }
    let value = infidelity_from_pairs(&pairs)?;
    Ok(InfidelityOutcome { value, pairs, perturbed_evals: model.eval_count() - before })
}

/// Mean and spread of infidelity under subsampling to one size.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsampleStat {
    /// Subsample size.
    pub size: usize,
    /// Mean infidelity over the repeats.
    pub mean: f64,
    /// Sample standard deviation over the repeats.
    pub std: f64,
}

/// Resample stored pairs to estimate how the infidelity value would spread
/// at smaller perturbation budgets.
///
/// For each requested size, `repeats` subsets are drawn without
/// replacement and scored by [`infidelity_from_pairs`]; the mean and
/// standard deviation over the repeats are reported. No model evaluations
/// happen here. The resampling stream is derived from the content of the
/// pairs and the arguments, so the output is a pure function of its inputs
/// and in particular identical across ambient seeds; a subsample of the
/// full size always reproduces the full-budget value exactly, with zero
/// spread.
pub fn infidelity_uncertainty(
    pairs: &[(f64, f64)],
    sizes: &[usize],
    repeats: usize,
) -> Result<Vec<SubsampleStat>> {
    if pairs.is_empty() {
        return Err(Error::Empty { what: "infidelity pairs" });
    }
    if sizes.is_empty() {
        return Err(Error::Empty { what: "sizes" });
    }
    if repeats == 0 {
        return Err(invalid("repeats", "need at least one repeat"));
    }
    for &size in sizes {
        if size == 0 || size > pairs.len() {
            return Err(invalid("sizes", "each size must lie in 1..=len(pairs)"));
        }
    }

    // Content-derived seed: hash every pair bit pattern plus the arguments.
    let mut key = 0x243f_6a88_85a3_08d3u64 ^ (pairs.len() as u64);
    let mut absorb = |v: u64| {
        key ^= v;
        key = key.rotate_left(23).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    };
    for (p, s) in pairs {
        absorb(p.to_bits());
        absorb(s.to_bits());
    }
    absorb(repeats as u64);
    for &s in sizes {
        absorb(s as u64);
    }
    let root = RandomStream::new(key);

    let mut out = Vec::with_capacity(sizes.len());
    for (si, &size) in sizes.iter().enumerate() {
        let mut stream = root.fork(si as u64).fork(size as u64);
        let mut values = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let mut idx = stream.sample_without_replacement(pairs.len(), size)?;
            // The draw is a set; summing in index order keeps the value
            // independent of draw order and bitwise-exact at full size.
            idx.sort_unstable();
            let subset: Vec<(f64, f64)> = idx.iter().map(|&i| pairs[i]).collect();
            values.push(infidelity_from_pairs(&subset)?);
        }
        out.push(SubsampleStat {
            size,
            mean: mean(&values),
            std: crate::math::sqrt(sample_variance(&values)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributions::gradients::gradient_attribution;
    use crate::attributions::{Attribution, Flavor};
    use crate::models::ScoringModel;
    use alloc::string::ToString;

    fn attr_of(values: &[f64]) -> Attribution {
        Attribution {
            values: values.to_vec(),
            method: "test".to_string(),
            hyperparams: Default::default(),
            target_class: 1,
            flavor: Flavor::Local,
        }
    }

    /// On a linear logit model the gradient predicts every perturbation
    /// effect exactly, so infidelity is identically zero, for any subset
    /// size, noise level, and draw count.
    #[test]
    fn gradient_on_linear_logit_model_is_exactly_faithful() {
        let w = alloc::vec![1.5, -2.0, 0.25, 3.0, -0.5];
        let model = ScoringModel::linear(w, 0.7).unwrap();
        let x = [0.2, -1.0, 2.0, 0.0, 1.1];
        let attr = gradient_attribution(&model, &x, 1).unwrap();
        for (k, sigma, n) in [(1usize, 0.1, 64usize), (3, 0.2, 256), (5, 1.0, 128)] {
            let cfg = InfidelityConfig { n_perturbations: n, noise_sigma: sigma, subset_size: k };
            let mut stream = RandomStream::new(7).fork(k as u64);
            let out = infidelity(&model, &x, &attr, &cfg, ScoreKind::Logit, &mut stream).unwrap();
            assert!(out.value < 1e-12, "k={k} sigma={sigma}: {}", out.value);
            for (p, s) in &out.pairs {
                assert!((p - s).abs() < 1e-9);
            }
        }
    }

    /// Hand oracle on a 1-feature linear model: predicted = -eta w,
    /// observed = -eta w as well; a deliberately wrong attribution a
    /// gives E[(eta (a - w))^2] = sigma^2 (a - w)^2.
    #[test]
    fn wrong_attribution_pays_the_expected_quadratic_price() {
        let model = ScoringModel::linear(alloc::vec![2.0], 0.0).unwrap();
        let x = [0.5];
        let attr = attr_of(&[5.0]); // off by 3
        let cfg = InfidelityConfig { n_perturbations: 20_000, noise_sigma: 0.2, subset_size: 1 };
        let mut stream = RandomStream::new(3);
        let out = infidelity(&model, &x, &attr, &cfg, ScoreKind::Logit, &mut stream).unwrap();
        // sigma^2 (a - w)^2 = 0.04 * 9 = 0.36; MC tolerance ~3 std errors.
        assert!((out.value - 0.36).abs() < 0.02, "value {}", out.value);
    }

    #[test]
    fn evaluation_accounting() {
        let model = ScoringModel::linear(alloc::vec![1.0, 1.0], 0.0).unwrap();
        let attr = attr_of(&[1.0, 1.0]);
        let cfg = InfidelityConfig { n_perturbations: 640, noise_sigma: 0.2, subset_size: 1 };
        model.reset_eval_count();
        let out = infidelity(
            &model,
            &[0.0, 0.0],
            &attr,
            &cfg,
            ScoreKind::Logit,
            &mut RandomStream::new(1),
        )
        .unwrap();
        assert_eq!(out.perturbed_evals, 640);
        assert_eq!(model.eval_count(), 641);
        assert_eq!(out.pairs.len(), 640);
    }

    #[test]
    fn validation_errors() {
        let model = ScoringModel::linear(alloc::vec![1.0, 1.0], 0.0).unwrap();
        let attr = attr_of(&[1.0, 1.0]);
        let mut s = RandomStream::new(0);
        let bad_k = InfidelityConfig { n_perturbations: 8, noise_sigma: 0.2, subset_size: 3 };
        assert!(infidelity(&model, &[0.0, 0.0], &attr, &bad_k, ScoreKind::Logit, &mut s).is_err());
        let zero_k = InfidelityConfig { n_perturbations: 8, noise_sigma: 0.2, subset_size: 0 };
        assert!(infidelity(&model, &[0.0, 0.0], &attr, &zero_k, ScoreKind::Logit, &mut s).is_err());
        let zero_n = InfidelityConfig { n_perturbations: 0, noise_sigma: 0.2, subset_size: 1 };
        assert!(infidelity(&model, &[0.0, 0.0], &attr, &zero_n, ScoreKind::Logit, &mut s).is_err());
        let bad_sigma = InfidelityConfig { n_perturbations: 8, noise_sigma: 0.0, subset_size: 1 };
        assert!(
            infidelity(&model, &[0.0, 0.0], &attr, &bad_sigma, ScoreKind::Logit, &mut s).is_err()
        );
        assert!(infidelity_from_pairs(&[]).is_err());
    }

    #[test]
    fn uncertainty_shrinks_with_size_and_vanishes_at_full_budget() {
        // Synthetic pairs with real spread.
        let mut s = RandomStream::new(5);
        let pairs: Vec<(f64, f64)> =
            (0..640).map(|_| (s.next_gaussian(), s.next_gaussian())).collect();
        let sizes = [20usize, 40, 80, 160, 320, 640];
        let stats = infidelity_uncertainty(&pairs, &sizes, 64).unwrap();
        for pair in stats.windows(2) {
            assert!(
                pair[0].std > pair[1].std,
                "std did not shrink: {} -> {}",
                pair[0].std,
                pair[1].std
            );
        }
        let full = &stats[5];
        assert_eq!(full.std, 0.0);
        let exact = infidelity_from_pairs(&pairs).unwrap();
        assert!((full.mean - exact).abs() < 1e-15);
    }

    /// The resampling stream comes from the pair content, never from an
    /// ambient seed: equal pairs give bitwise-equal stats, and changing a
    /// single pair changes the draw pattern.
    #[test]
    fn uncertainty_is_a_pure_function_of_its_inputs() {
        let mut s = RandomStream::new(9);
        let pairs: Vec<(f64, f64)> =
            (0..64).map(|_| (s.next_gaussian(), s.next_gaussian())).collect();
        let a = infidelity_uncertainty(&pairs, &[8, 16], 32).unwrap();
        let b = infidelity_uncertainty(&pairs, &[8, 16], 32).unwrap();
        assert_eq!(a, b);
        let mut tweaked = pairs.clone();
        tweaked[0].0 += 1e-9;
        let c = infidelity_uncertainty(&tweaked, &[8, 16], 32).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uncertainty_validation() {
        let pairs = [(1.0, 0.5), (0.3, 0.2)];
        assert!(infidelity_uncertainty(&pairs, &[], 4).is_err());
        assert!(infidelity_uncertainty(&pairs, &[3], 4).is_err());
        assert!(infidelity_uncertainty(&pairs, &[0], 4).is_err());
        assert!(infidelity_uncertainty(&pairs, &[1], 0).is_err());
        assert!(infidelity_uncertainty(&[], &[1], 4).is_err());
    }
}
