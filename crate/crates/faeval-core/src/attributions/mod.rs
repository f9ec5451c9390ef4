//! Feature attribution methods.
//!
//! Every method returns an [`Attribution`]: the per-feature values plus
//! enough metadata (method id, canonical hyperparameters, target class,
//! flavor) to key caches and result tables. Gradient-family methods explain
//! the class logit; LIME fits the class probability.
//!
//! The [`Flavor`] distinction matters downstream: baseline-oriented values
//! explain the score difference against a reference point, local values
//! approximate the score's local slope, and directional metrics treat the
//! two differently.

pub mod edge;
pub mod gradients;
pub mod lime;
pub mod shap;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::numerics::rng::RandomStream;

/// What the values of an attribution mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Approximates the score's local behavior around the input.
    Local,
    /// Explains the score change against an explicit baseline.
    BaselineOriented,
}

impl Flavor {
    /// Stable lowercase name.
    pub fn as_str(&self) -> &'static str {
        match self {
            Flavor::Local => "local",
            Flavor::BaselineOriented => "baseline-oriented",
        }
    }
}

/// One explanation of one input.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    /// One value per input feature.
    pub values: Vec<f64>,
    /// Method identifier, e.g. `integrated-gradients`.
    pub method: String,
    /// Canonical (sorted-key) hyperparameters that produced the values.
    pub hyperparams: BTreeMap<String, String>,
    /// Class whose score was explained.
    pub target_class: u8,
    /// Semantic flavor of the values.
    pub flavor: Flavor,
}

impl Attribution {
    /// Number of features covered.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// True when every value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Hyperparameters flattened to `k=v;k=v` in key order.
    pub fn params_string(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.hyperparams.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out
    }
}

/// Canonical number formatting for hyperparameter maps: shortest string
/// that round-trips the value.
pub fn fmt_param(v: f64) -> String {
    let mut buf = String::new();
    core::fmt::write(&mut buf, format_args!("{v}")).expect("formatting into a String");
    buf
}

pub(crate) fn params_from(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Control explainer: standard-normal values drawn from `stream`.
///
/// With `constant` set the caller is expected to hand the same stream path
/// to every input of a run, which makes the drawn vector run-constant; the
/// flag is recorded in the hyperparameters so the two controls stay
/// distinguishable in results.
pub fn random_attribution(
    dim: usize,
    constant: bool,
    stream: &mut RandomStream,
) -> Result<Attribution> {
    if dim == 0 {
        return Err(invalid("dim", "attribution needs at least one feature"));
    }
    let values: Vec<f64> = (0..dim).map(|_| stream.next_gaussian()).collect();
    Ok(Attribution {
        values,
        method: "random".to_string(),
        hyperparams: params_from(&[("constant", if constant { "true" } else { "false" }.to_string())]),
        target_class: 1,
        flavor: Flavor::Local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_string_is_key_sorted_and_canonical() {
        let a = Attribution {
            values: alloc::vec![1.0],
            method: "demo".to_string(),
            hyperparams: params_from(&[
                ("sigma", fmt_param(0.25)),
                ("n", "64".to_string()),
                ("alpha", fmt_param(5.5e-5)),
            ]),
            target_class: 1,
            flavor: Flavor::Local,
        };
        assert_eq!(a.params_string(), "alpha=0.000055;n=64;sigma=0.25");
    }

    #[test]
    fn fmt_param_round_trips() {
        for &v in &[0.1, 0.25, 5.5e-5, 1.0, 1e9, 0.375, -3.25] {
            let s = fmt_param(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn random_attribution_streams() {
        let root = RandomStream::new(9);
        let a = random_attribution(5, false, &mut root.fork(1)).unwrap();
        let b = random_attribution(5, false, &mut root.fork(2)).unwrap();
        let a2 = random_attribution(5, false, &mut root.fork(1)).unwrap();
        assert_ne!(a.values, b.values);
        assert_eq!(a.values, a2.values);
        assert!(a.all_finite());
        assert_eq!(a.dim(), 5);
        assert!(random_attribution(0, false, &mut root.fork(3)).is_err());
        let c = random_attribution(5, true, &mut root.fork(1)).unwrap();
        assert_eq!(c.hyperparams.get("constant").unwrap(), "true");
        assert_eq!(c.values, a.values);
    }
}
