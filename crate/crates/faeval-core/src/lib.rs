//! Faithfulness evaluation for feature attributions.
//!
//! The crate provides, in dependency order:
//!
//! * [`numerics`]: counter-based random streams, a small dense matrix type,
//!   and weighted ridge regression.
//! * [`models`]: linear and ReLU-MLP binary classifiers with a shared scoring
//!   interface, exact backward passes (plain, guided, and finite-difference
//!   rescale rules), and an AdamW trainer.
//! * [`attributions`]: gradient-family explainers, LIME for tabular and image
//!   inputs, DeepLiftSHAP, an edge-detector control, and random controls.
//! * [`metrics`]: guided perturbation experiments producing prediction-change
//!   and directed-prediction-change curves, the area-between-curves summary,
//!   and perturbation-based infidelity with subsample uncertainty.
//! * [`audit`]: exhaustive small-instance checks of summation-to-delta and
//!   of perturbation-order optimality.
//! * [`data`]: synthetic dataset generators plus stratified splitting and
//!   standardization.
//! * [`stats`]: rank correlation and Pareto-front extraction for comparing
//!   metric outcomes across explainer configurations.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature and enable `libm` to build for targets without a runtime.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("faeval-core needs either the `std` or the `libm` feature");

pub mod audit;
pub mod attributions;
pub mod data;
pub mod error;
pub mod math;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod stats;

pub use error::{Error, Result};
pub use numerics::matrix::Matrix;
pub use numerics::rng::RandomStream;
