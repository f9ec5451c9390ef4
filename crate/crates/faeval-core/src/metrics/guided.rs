//! Guided perturbation experiments and the area between their curves.

use alloc::vec::Vec;

use crate::attributions::Attribution;
use crate::error::{dim, invalid, Result};
use crate::models::{ScoreKind, ScoringModel};
use crate::numerics::sign;

/// Perturbation direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbOrder {
    /// Most relevant features first.
    Morf,
    /// Least relevant features first.
    Lerf,
}

/// How attribution values are turned into a relevance order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankingRule {
    /// Signed values, descending.
    SignedDesc,
    /// Absolute values, descending.
    AbsoluteDesc,
}

impl RankingRule {
    /// Stable lowercase name.
    pub fn as_str(&self) -> &'static str {
        match self {
            RankingRule::SignedDesc => "signed",
            RankingRule::AbsoluteDesc => "absolute",
        }
    }
}

/// Which curve a summary reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    /// Raw prediction change.
    Pc,
    /// Direction-corrected prediction change.
    Dpc,
}

/// A fully resolved perturbation plan: disjoint feature groups in the
/// order they will be flipped to the baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSchedule {
    /// Perturbation direction this plan was built for.
    pub order: PerturbOrder,
    /// Ranking rule that produced the groups.
    pub ranking: RankingRule,
    /// Feature-index groups, flip order.
    pub groups: Vec<Vec<usize>>,
    /// Replacement values, one per feature.
    pub baseline: Vec<f64>,
}

impl PerturbationSchedule {
    /// Number of steps.
    pub fn steps(&self) -> usize {
        self.groups.len()
    }
}

/// Build the flip plan for an attribution.
///
/// Features are ranked by the rule (ties broken by ascending index) and cut
/// into `steps` contiguous rank buckets of equal size; a remainder joins
/// the last bucket. Singleton groups fall out naturally at `steps == dim`.
/// The LeRF plan is exactly the MoRF plan with the group sequence reversed,
/// so both orders share group composition by construction.
pub fn build_schedule(
    attr_values: &[f64],
    steps: usize,
    ranking: RankingRule,
    order: PerturbOrder,
    baseline: &[f64],
) -> Result<PerturbationSchedule> {
    let d = attr_values.len();
    if d == 0 {
        return Err(invalid("attribution", "needs at least one feature"));
    }
    if baseline.len() != d {
        return Err(dim("baseline", d, baseline.len()));
    }
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    if steps > d {
        return Err(invalid("steps", "more steps than features"));
    }
    let key = |i: usize| match ranking {
        RankingRule::SignedDesc => attr_values[i],
        RankingRule::AbsoluteDesc => crate::math::abs(attr_values[i]),
    };
    let mut ranked: Vec<usize> = (0..d).collect();
    ranked.sort_by(|&a, &b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let base = d / steps;
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(steps);
    let mut cursor = 0;
    for t in 0..steps {
        let take = if t + 1 == steps { d - cursor } else { base };
        groups.push(ranked[cursor..cursor + take].to_vec());
        cursor += take;
    }
    if order == PerturbOrder::Lerf {
        groups.reverse();
    }
    Ok(PerturbationSchedule { order, ranking, groups, baseline: baseline.to_vec() })
}

/// Step-by-step outcome of one guided experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRecord {
    /// Score before any perturbation.
    pub score0: f64,
    /// Per-step prediction change `s(pi_t) - s(pi_{t-1})`.
    pub pc_steps: Vec<f64>,
    /// Per-step direction-corrected change.
    pub dpc_steps: Vec<f64>,
    /// Counted model evaluations this experiment consumed.
    pub eval_count: u64,
}

impl CurveRecord {
    /// Cumulative prediction-change curve.
    pub fn cumulative_pc(&self) -> Vec<f64> {
        cumulative(&self.pc_steps)
    }

    /// Cumulative direction-corrected curve.
    pub fn cumulative_dpc(&self) -> Vec<f64> {
        cumulative(&self.dpc_steps)
    }

    /// Score after the final step (telescoped).
    pub fn final_score(&self) -> f64 {
        self.score0 + self.pc_steps.iter().sum::<f64>()
    }
}

fn cumulative(steps: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    steps
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect()
}

/// MoRF and LeRF runs of one attribution, sharing the unperturbed score.
#[derive(Clone, Debug)]
pub struct GuidedPair {
    /// Most-relevant-first run.
    pub morf: CurveRecord,
    /// Least-relevant-first run.
    pub lerf: CurveRecord,
}

/// Run one guided experiment.
///
/// At step `t` the features of group `t` are set to their baseline values
/// (cumulatively), the model is scored, and the prediction change is
/// recorded. Its direction-corrected variant multiplies each change by
/// `sign(sum of the group's attributions) * sign(sum of the group's
/// feature-minus-baseline deltas)`, so a step only keeps its sign when the
/// attribution's claimed direction matches the actual perturbation
/// direction; either sum being zero zeroes the step.
///
/// Scoring goes through the counted interface; `eval_count` in the result
/// is the counter delta, which is `steps + 1` here (the unperturbed score
/// plus one evaluation per step). [`run_guided_pair`] shares the
/// unperturbed score across both orders.
pub fn run_guided_experiment(
    model: &ScoringModel,
    x: &[f64],
    attr: &Attribution,
    schedule: &PerturbationSchedule,
    score: ScoreKind,
) -> Result<CurveRecord> {
    let before = model.eval_count();
    let score0 = model.class_score(x, score, attr.target_class)?;
    let mut record = run_with_score0(model, x, attr, schedule, score, score0)?;
    record.eval_count = model.eval_count() - before;
    Ok(record)
}

fn run_with_score0(
    model: &ScoringModel,
    x: &[f64],
    attr: &Attribution,
    schedule: &PerturbationSchedule,
    score: ScoreKind,
    score0: f64,
) -> Result<CurveRecord> {
    let d = model.input_dim();
    if x.len() != d {
        return Err(dim("input", d, x.len()));
    }
    if attr.dim() != d {
        return Err(dim("attribution", d, attr.dim()));
    }
    if schedule.baseline.len() != d {
        return Err(dim("schedule baseline", d, schedule.baseline.len()));
    }
    let before = model.eval_count();
    let steps = schedule.steps();
    let mut pc_steps = Vec::with_capacity(steps);
    let mut dpc_steps = Vec::with_capacity(steps);
    let mut perturbed = x.to_vec();
    let mut prev = score0;
    for group in &schedule.groups {
        let mut attr_sum = 0.0;
        let mut delta_sum = 0.0;
        for &i in group {
            if i >= d {
                return Err(dim("group index", d, i));
            }
            attr_sum += attr.values[i];
            delta_sum += x[i] - schedule.baseline[i];
            perturbed[i] = schedule.baseline[i];
        }
        let s_t = model.class_score(&perturbed, score, attr.target_class)?;
        let pc = s_t - prev;
        prev = s_t;
        pc_steps.push(pc);
        dpc_steps.push(sign(attr_sum) * sign(delta_sum) * pc);
    }
    Ok(CurveRecord { score0, pc_steps, dpc_steps, eval_count: model.eval_count() - before })
}

/// Run both orders with one shared unperturbed score.
///
/// Consumes `2 * steps + 1` counted evaluations in total; each record's
/// `eval_count` holds its own `steps` perturbed evaluations, and the shared
/// unperturbed score is reported separately by the caller if needed.
pub fn run_guided_pair(
    model: &ScoringModel,
    x: &[f64],
    attr: &Attribution,
    steps: usize,
    ranking: RankingRule,
    baseline: &[f64],
    score: ScoreKind,
) -> Result<GuidedPair> {
    let morf_plan = build_schedule(&attr.values, steps, ranking, PerturbOrder::Morf, baseline)?;
    let lerf_plan = build_schedule(&attr.values, steps, ranking, PerturbOrder::Lerf, baseline)?;
    let score0 = model.class_score(x, score, attr.target_class)?;
    let morf = run_with_score0(model, x, attr, &morf_plan, score, score0)?;
    let lerf = run_with_score0(model, x, attr, &lerf_plan, score, score0)?;
    Ok(GuidedPair { morf, lerf })
}

/// Early-emphasis step weights `w_t = 2(T - t + 1) / (T (T + 1))`,
/// decreasing and summing to one. Every curve summary in the crate weights
/// steps through this one function.
pub fn early_emphasis_weights(steps: usize) -> Vec<f64> {
    let t = steps as f64;
    (1..=steps).map(|i| 2.0 * (t - i as f64 + 1.0) / (t * (t + 1.0))).collect()
}

/// Early-weighted area between the LeRF and MoRF cumulative curves:
/// `sum_t w_t (C_t^lerf - C_t^morf)` on the curve chosen by `kind`.
/// Positive values mean removing relevant features first moved the score
/// down faster than removing irrelevant ones.
pub fn abpc(lerf: &CurveRecord, morf: &CurveRecord, kind: MetricKind) -> Result<f64> {
    if lerf.pc_steps.len() != morf.pc_steps.len() {
        return Err(dim("curve lengths", morf.pc_steps.len(), lerf.pc_steps.len()));
    }
    if lerf.pc_steps.is_empty() {
        return Err(invalid("curves", "need at least one step"));
    }
    let (cl, cm) = match kind {
        MetricKind::Pc => (lerf.cumulative_pc(), morf.cumulative_pc()),
        MetricKind::Dpc => (lerf.cumulative_dpc(), morf.cumulative_dpc()),
    };
    let w = early_emphasis_weights(cl.len());
    Ok(cl
        .iter()
        .zip(&cm)
        .zip(&w)
        .map(|((l, m), wi)| wi * (l - m))
        .sum())
}

/// Weighted area under one cumulative curve: `sum_t w_t C_t`. The
/// order-optimality audit compares attribution-ranked plans against all
/// permutations through this.
pub fn weighted_aupc(record: &CurveRecord, kind: MetricKind) -> f64 {
    let c = match kind {
        MetricKind::Pc => record.cumulative_pc(),
        MetricKind::Dpc => record.cumulative_dpc(),
    };
    let w = early_emphasis_weights(c.len());
    c.iter().zip(&w).map(|(ci, wi)| ci * wi).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributions::{Attribution, Flavor};
    use crate::models::ScoringModel;
    use crate::numerics::RandomStream;
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

    #[test]
    fn schedule_ranks_and_buckets_by_hand() {
        // Values (3, -1, 2, 0): signed descending is [0, 2, 3, 1].
        let s = build_schedule(
            &[3.0, -1.0, 2.0, 0.0],
            4,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 4],
        )
        .unwrap();
        assert_eq!(s.groups, alloc::vec![alloc::vec![0], alloc::vec![2], alloc::vec![3], alloc::vec![1]]);
        // Absolute descending: [0, 2, 1, 3].
        let s = build_schedule(
            &[3.0, -1.0, 2.0, 0.0],
            4,
            RankingRule::AbsoluteDesc,
            PerturbOrder::Morf,
            &[0.0; 4],
        )
        .unwrap();
        assert_eq!(s.groups, alloc::vec![alloc::vec![0], alloc::vec![2], alloc::vec![1], alloc::vec![3]]);
        // Two steps over five features: bucket sizes 2 and 3.
        let s = build_schedule(
            &[5.0, 4.0, 3.0, 2.0, 1.0],
            2,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 5],
        )
        .unwrap();
        assert_eq!(s.groups, alloc::vec![alloc::vec![0, 1], alloc::vec![2, 3, 4]]);
    }

    #[test]
    fn ties_break_by_ascending_index() {
        let s = build_schedule(
            &[1.0, 1.0, 1.0],
            3,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 3],
        )
        .unwrap();
        assert_eq!(s.groups, alloc::vec![alloc::vec![0], alloc::vec![1], alloc::vec![2]]);
    }

    #[test]
    fn lerf_is_the_exact_reversal_of_morf() {
        let values = [0.3, -0.7, 0.1, 0.9, -0.2, 0.4, 0.0];
        for steps in [1usize, 2, 3, 7] {
            for ranking in [RankingRule::SignedDesc, RankingRule::AbsoluteDesc] {
                let morf =
                    build_schedule(&values, steps, ranking, PerturbOrder::Morf, &[0.0; 7]).unwrap();
                let lerf =
                    build_schedule(&values, steps, ranking, PerturbOrder::Lerf, &[0.0; 7]).unwrap();
                let mut reversed = morf.groups.clone();
                reversed.reverse();
                assert_eq!(lerf.groups, reversed, "steps {steps}");
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(build_schedule(&[], 1, RankingRule::SignedDesc, PerturbOrder::Morf, &[]).is_err());
        assert!(
            build_schedule(&[1.0], 2, RankingRule::SignedDesc, PerturbOrder::Morf, &[0.0]).is_err()
        );
        assert!(
            build_schedule(&[1.0], 0, RankingRule::SignedDesc, PerturbOrder::Morf, &[0.0]).is_err()
        );
        assert!(build_schedule(&[1.0, 2.0], 1, RankingRule::SignedDesc, PerturbOrder::Morf, &[0.0])
            .is_err());
    }

    /// Closed-form check on a linear logit model: flipping group G to the
    /// baseline changes the score by `-sum_{i in G} w_i (x_i - b_i)`,
    /// independent of flip order.
    #[test]
    fn pc_steps_match_linear_closed_form() {
        let w = [2.0, -1.0, 0.5, 3.0];
        let model = ScoringModel::linear(w.to_vec(), 0.3).unwrap();
        let x = [1.0, 2.0, -1.0, 0.5];
        let b = [0.1, -0.2, 0.0, 0.4];
        let attr = attr_of(&[4.0, 3.0, 2.0, 1.0]);
        let schedule =
            build_schedule(&attr.values, 4, RankingRule::SignedDesc, PerturbOrder::Morf, &b)
                .unwrap();
        let rec =
            run_guided_experiment(&model, &x, &attr, &schedule, ScoreKind::Logit).unwrap();
        for (t, group) in schedule.groups.iter().enumerate() {
            let expect: f64 = group.iter().map(|&i| -w[i] * (x[i] - b[i])).sum();
            assert!((rec.pc_steps[t] - expect).abs() < 1e-12, "step {t}");
        }
    }

    /// The cumulative curve telescopes: score0 plus the step sum equals the
    /// fully perturbed score, for both orders and both score functions.
    #[test]
    fn curves_telescope_to_the_fully_perturbed_score() {
        let mut s = RandomStream::new(41);
        let w: alloc::vec::Vec<f64> = (0..6).map(|_| s.next_gaussian()).collect();
        let model = ScoringModel::linear(w, 0.1).unwrap();
        let x: alloc::vec::Vec<f64> = (0..6).map(|_| s.next_gaussian()).collect();
        let attr = attr_of(&(0..6).map(|_| s.next_gaussian()).collect::<alloc::vec::Vec<f64>>());
        let baseline = alloc::vec![0.0; 6];
        for score in [ScoreKind::Logit, ScoreKind::Probability] {
            let pair = run_guided_pair(
                &model,
                &x,
                &attr,
                3,
                RankingRule::AbsoluteDesc,
                &baseline,
                score,
            )
            .unwrap();
            let s_full = model.class_score(&baseline, score, 1).unwrap();
            assert!((pair.morf.final_score() - s_full).abs() < 1e-12);
            assert!((pair.lerf.final_score() - s_full).abs() < 1e-12);
            assert_eq!(pair.morf.score0, pair.lerf.score0);
        }
    }

    /// Direction correction by hand on one step: positive attribution sum,
    /// positive delta, falling score => negative DPC kept negative;
    /// flipping the attribution sign flips the DPC sign; zero attribution
    /// sum zeroes it.
    #[test]
    fn dpc_direction_cases_by_hand() {
        let model = ScoringModel::linear(alloc::vec![1.0], 0.0).unwrap();
        let x = [2.0];
        let baseline = [0.0];
        let run = |a: f64| {
            let attr = attr_of(&[a]);
            let schedule = build_schedule(
                &attr.values,
                1,
                RankingRule::SignedDesc,
                PerturbOrder::Morf,
                &baseline,
            )
            .unwrap();
            run_guided_experiment(&model, &x, &attr, &schedule, ScoreKind::Logit).unwrap()
        };
        // PC = s(0) - s(x) = -2.
        let pos = run(0.7);
        assert_eq!(pos.pc_steps[0], -2.0);
        assert_eq!(pos.dpc_steps[0], -2.0);
        let neg = run(-0.7);
        assert_eq!(neg.dpc_steps[0], 2.0);
        let zero = run(0.0);
        assert_eq!(zero.dpc_steps[0], 0.0);
    }

    #[test]
    fn eval_counts_come_from_the_counter() {
        let model = ScoringModel::linear(alloc::vec![1.0, -1.0, 0.5, 2.0], 0.0).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let attr = attr_of(&[1.0, 2.0, 3.0, 4.0]);
        model.reset_eval_count();
        let pair = run_guided_pair(
            &model,
            &x,
            &attr,
            4,
            RankingRule::SignedDesc,
            &[0.0; 4],
            ScoreKind::Logit,
        )
        .unwrap();
        assert_eq!(pair.morf.eval_count, 4);
        assert_eq!(pair.lerf.eval_count, 4);
        assert_eq!(model.eval_count(), 9); // 2 * steps + 1 shared score0
        let schedule = build_schedule(
            &attr.values,
            2,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 4],
        )
        .unwrap();
        model.reset_eval_count();
        let rec = run_guided_experiment(&model, &x, &attr, &schedule, ScoreKind::Logit).unwrap();
        assert_eq!(rec.eval_count, 3); // score0 + 2 steps
        assert_eq!(model.eval_count(), 3);
    }

    #[test]
    fn weights_are_the_documented_sequence() {
        // T = 2: weights 2/3, 1/3.
        let w = early_emphasis_weights(2);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
        for t in 1..30 {
            let w = early_emphasis_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "T = {t}");
            for pair in w.windows(2) {
                assert!(pair[0] > pair[1]);
            }
            // Closed form at each position.
            for (i, wi) in w.iter().enumerate() {
                let tt = t as f64;
                let expect = 2.0 * (tt - (i + 1) as f64 + 1.0) / (tt * (tt + 1.0));
                assert!((wi - expect).abs() < 1e-15);
            }
        }
    }

    /// ABPC against a hand-computed value on a 2-step curve pair.
    #[test]
    fn abpc_by_hand() {
        let morf = CurveRecord {
            score0: 1.0,
            pc_steps: alloc::vec![-0.6, -0.1],
            dpc_steps: alloc::vec![-0.6, -0.1],
            eval_count: 2,
        };
        let lerf = CurveRecord {
            score0: 1.0,
            pc_steps: alloc::vec![-0.1, -0.6],
            dpc_steps: alloc::vec![0.1, 0.6],
            eval_count: 2,
        };
        // Cumulative MoRF: (-0.6, -0.7); LeRF: (-0.1, -0.7).
        // ABPC = 2/3 * (-0.1 + 0.6) + 1/3 * (-0.7 + 0.7) = 1/3.
        let v = abpc(&lerf, &morf, MetricKind::Pc).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        // DPC cumulative: LeRF (0.1, 0.7), MoRF (-0.6, -0.7):
        // 2/3 * 0.7 + 1/3 * 1.4 = 0.9333...
        let v = abpc(&lerf, &morf, MetricKind::Dpc).unwrap();
        assert!((v - (2.0 / 3.0 * 0.7 + 1.4 / 3.0)).abs() < 1e-12);
        // Mismatched lengths rejected.
        let short = CurveRecord {
            score0: 1.0,
            pc_steps: alloc::vec![-0.6],
            dpc_steps: alloc::vec![-0.6],
            eval_count: 1,
        };
        assert!(abpc(&short, &morf, MetricKind::Pc).is_err());
    }

    /// Grouped flips against singleton flips: on a linear model the grouped
    /// PC equals the sum of its members' singleton PCs.
    #[test]
    fn grouped_steps_sum_member_effects_on_linear_models() {
        let w = [1.0, -2.0, 3.0, -4.0, 5.0, -6.0];
        let model = ScoringModel::linear(w.to_vec(), 0.0).unwrap();
        let mut s = RandomStream::new(9);
        let x: alloc::vec::Vec<f64> = (0..6).map(|_| s.next_gaussian()).collect();
        let attr = attr_of(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        let singles = build_schedule(
            &attr.values,
            6,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 6],
        )
        .unwrap();
        let grouped = build_schedule(
            &attr.values,
            3,
            RankingRule::SignedDesc,
            PerturbOrder::Morf,
            &[0.0; 6],
        )
        .unwrap();
        let r1 =
            run_guided_experiment(&model, &x, &attr, &singles, ScoreKind::Logit).unwrap();
        let r3 =
            run_guided_experiment(&model, &x, &attr, &grouped, ScoreKind::Logit).unwrap();
        for t in 0..3 {
            let want = r1.pc_steps[2 * t] + r1.pc_steps[2 * t + 1];
            assert!((r3.pc_steps[t] - want).abs() < 1e-12);
        }
    }
}
