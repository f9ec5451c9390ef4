//! Exhaustive audits of attribution claims on small inputs.
//!
//! Both checks brute-force the combinatorial object they quantify over, so
//! they only run on low-dimensional instances; the point is to certify or
//! refute a property exactly rather than sample it.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::attributions::{Attribution, Flavor};
use crate::error::{dim, Error, Result};
use crate::metrics::{
    build_schedule, run_guided_experiment, weighted_aupc, MetricKind, PerturbOrder,
    PerturbationSchedule, RankingRule,
};
use crate::models::{ScoreKind, ScoringModel};

/// Hard cap on the input dimension for the subset audit (`2^d - 1` model
/// evaluations).
pub const SENSITIVITY_MAX_DIM: usize = 12;
/// Hard cap on the input dimension for the ordering audit (`d!` curve
/// runs).
pub const OPTIMALITY_MAX_DIM: usize = 8;

/// Outcome of [`sensitivity_n_audit`].
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    /// Number of feature subsets evaluated (`2^d - 1`).
    pub checked_subsets: usize,
    /// Largest residual over all subsets.
    pub max_residual: f64,
    /// Subsets whose residual exceeds the tolerance.
    pub violations: usize,
    /// Residual threshold used.
    pub tolerance: f64,
    /// True when no subset violates.
    pub pass: bool,
}

/// Check whether attribution sums match score drops on every feature
/// subset.
///
/// For each nonempty subset `S`, the features in `S` are flipped to the
/// baseline and the residual `|sum_{i in S} a_i - (s(x) - s(x_S))|` is
/// recorded, with `s` the class-1 logit. A method whose scores admit this
/// additive reading passes at a small tolerance on models where the logit
/// is linear in the flipped coordinates; saliency-style methods generally
/// do not.
pub fn sensitivity_n_audit(
    model: &ScoringModel,
    x: &[f64],
    attr_values: &[f64],
    baseline: &[f64],
    tolerance: f64,
) -> Result<SensitivityReport> {
    let d = model.input_dim();
    if d > SENSITIVITY_MAX_DIM {
        return Err(Error::TooLarge { what: "input dimension", limit: SENSITIVITY_MAX_DIM, got: d });
    }
    if x.len() != d {
        return Err(dim("input", d, x.len()));
    }
    if attr_values.len() != d {
        return Err(dim("attribution", d, attr_values.len()));
    }
    if baseline.len() != d {
        return Err(dim("baseline", d, baseline.len()));
    }

    let s_x = model.class_score(x, ScoreKind::Logit, 1)?;
    let mut max_residual = 0.0f64;
    let mut violations = 0usize;
    let mut flipped = x.to_vec();
    let total = (1usize << d) - 1;
    for mask in 1..=total {
        let mut attr_sum = 0.0;
        for i in 0..d {
            if mask & (1 << i) != 0 {
                flipped[i] = baseline[i];
                attr_sum += attr_values[i];
            } else {
                flipped[i] = x[i];
            }
        }
        let s_flipped = model.class_score(&flipped, ScoreKind::Logit, 1)?;
        let residual = crate::math::abs(attr_sum - (s_x - s_flipped));
        if residual > max_residual {
            max_residual = residual;
        }
        if residual > tolerance {
            violations += 1;
        }
    }
    Ok(SensitivityReport {
        checked_subsets: total,
        max_residual,
        violations,
        tolerance,
        pass: violations == 0,
    })
}

/// Outcome of [`pc_optimality_audit`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    /// Weighted area under the removal curve for the attribution's own
    /// ordering.
    pub attr_aupc: f64,
    /// Smallest weighted area over all feature orderings.
    pub best_aupc: f64,
    /// An ordering achieving the minimum.
    pub best_perm: Vec<usize>,
    /// Number of orderings evaluated (`d!`).
    pub permutations_checked: usize,
    /// Slack allowed between the attribution's area and the minimum.
    pub tolerance: f64,
    /// True when the attribution's ordering is within tolerance of the
    /// minimum.
    pub pass: bool,
}

/// Check whether an attribution's removal ordering minimizes the
/// early-weighted area under the most-relevant-first curve.
///
/// Every permutation of the features is run as a one-feature-per-step
/// removal schedule and scored by [`weighted_aupc`] on the raw prediction
/// change; the attribution competes with its usual signed-descending
/// ordering. An ordering is optimal exactly when no permutation drops the
/// score faster in the weighted sense, which is what the pass flag
/// certifies (up to `tolerance`).
pub fn pc_optimality_audit(
    model: &ScoringModel,
    x: &[f64],
    attr_values: &[f64],
    baseline: &[f64],
    score: ScoreKind,
    tolerance: f64,
) -> Result<OptimalityReport> {
    let d = model.input_dim();
    if d > OPTIMALITY_MAX_DIM {
        return Err(Error::TooLarge { what: "input dimension", limit: OPTIMALITY_MAX_DIM, got: d });
    }
    if x.len() != d {
        return Err(dim("input", d, x.len()));
    }
    if attr_values.len() != d {
        return Err(dim("attribution", d, attr_values.len()));
    }
    if baseline.len() != d {
        return Err(dim("baseline", d, baseline.len()));
    }

    let attr = Attribution {
        values: attr_values.to_vec(),
        method: "ordering-audit".to_string(),
        hyperparams: BTreeMap::new(),
        target_class: 1,
        flavor: Flavor::Local,
    };
    let attr_schedule =
        build_schedule(attr_values, d, RankingRule::SignedDesc, PerturbOrder::Morf, baseline)?;
    let attr_record = run_guided_experiment(model, x, &attr, &attr_schedule, score)?;
    let attr_aupc = weighted_aupc(&attr_record, MetricKind::Pc);

    let run_perm = |perm: &[usize]| -> Result<f64> {
        let schedule = PerturbationSchedule {
            order: PerturbOrder::Morf,
            ranking: RankingRule::SignedDesc,
            groups: perm.iter().map(|&i| vec![i]).collect(),
            baseline: baseline.to_vec(),
        };
        let record = run_guided_experiment(model, x, &attr, &schedule, score)?;
        Ok(weighted_aupc(&record, MetricKind::Pc))
    };

    // Heap's permutation scheme: one swap per step visits all d! orderings.
    let mut perm: Vec<usize> = (0..d).collect();
    let mut best_aupc = run_perm(&perm)?;
    let mut best_perm = perm.clone();
    let mut permutations_checked = 1usize;
    let mut counters = vec![0usize; d];
    let mut i = 0;
    while i < d {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let aupc = run_perm(&perm)?;
            permutations_checked += 1;
            if aupc < best_aupc {
                best_aupc = aupc;
                best_perm = perm.clone();
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }

    Ok(OptimalityReport {
        attr_aupc,
        best_aupc,
        best_perm,
        permutations_checked,
        tolerance,
        pass: attr_aupc <= best_aupc + tolerance,
    })
}
