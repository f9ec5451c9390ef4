//! Deterministic random streams, dense matrices, and ridge regression.

pub mod matrix;
pub mod ridge;
pub mod rng;

pub use matrix::Matrix;
pub use ridge::{ridge_fit, RidgeFit};
pub use rng::{gaussian_vector, RandomStream};

/// Sign with a hard zero: `1.0` for positive, `-1.0` for negative, `0.0`
/// for zero or non-comparable values.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Arithmetic mean; `0.0` for an empty slice.
///
/// Computed as a running mean, which is exact on constant input.
pub fn mean(xs: &[f64]) -> f64 {
    let mut m = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        m += (x - m) / (i + 1) as f64;
    }
    m
}

/// Unbiased sample variance (`n - 1` divisor); `0.0` for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    // Welford's recurrence: constant input yields exactly zero.
    let mut m = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - m;
        m += delta / (i + 1) as f64;
        m2 += delta * (x - m);
    }
    m2 / (xs.len() - 1) as f64
}

/// Median of a slice (average of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = alloc::vec::Vec::from(xs);
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
