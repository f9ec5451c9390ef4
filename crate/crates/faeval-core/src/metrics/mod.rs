//! Faithfulness metrics over one model, one input, one attribution.
//!
//! [`guided`] covers the perturbation-curve family: features are replaced
//! by baseline values in attribution-ranked groups, most relevant first
//! (MoRF) or least relevant first (LeRF), producing per-step prediction
//! changes and their direction-corrected counterparts, summarized by an
//! early-weighted area between the two cumulative curves.
//!
//! [`infidelity`] covers the perturbation-regression family: random feature
//! subsets get Gaussian noise and the squared gap between the attribution's
//! predicted effect and the observed score change is averaged.

pub mod guided;
pub mod infidelity;

pub use guided::{
    abpc, build_schedule, early_emphasis_weights, run_guided_experiment, run_guided_pair,
    weighted_aupc, CurveRecord, GuidedPair, MetricKind, PerturbOrder, PerturbationSchedule,
    RankingRule,
};
pub use infidelity::{
    infidelity, infidelity_from_pairs, infidelity_uncertainty, InfidelityConfig,
    InfidelityOutcome, SubsampleStat,
};
