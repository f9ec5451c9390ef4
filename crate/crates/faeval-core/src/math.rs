//! Float transcendentals routed through `std` or `libm`.
//!
//! All crate code calls these shims instead of inherent `f64` methods so a
//! `no_std` build only swaps this module's backend.

#[cfg(feature = "std")]
mod backend {
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        x.round()
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
}

#[cfg(not(feature = "std"))]
mod backend {
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
}

pub use backend::{abs, ceil, cos, exp, floor, ln, round, sqrt};

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// Stable binary cross-entropy from a logit: `max(z,0) - z*y + ln(1+e^{-|z|})`.
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    let m = if z > 0.0 { z } else { 0.0 };
    m - z * y + ln(1.0 + exp(-abs(z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_direct_form_and_saturates() {
        for &z in &[-3.0, -0.5, 0.0, 0.5, 3.0] {
            let direct = 1.0 / (1.0 + exp(-z));
            assert!((sigmoid(z) - direct).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0) > 1.0 - 1e-15);
    }

    #[test]
    fn bce_is_finite_at_extreme_logits() {
        assert!(bce_with_logit(1e9, 1.0).is_finite());
        assert!(bce_with_logit(-1e9, 0.0).is_finite());
        assert!(bce_with_logit(1e9, 0.0) > 1e8);
    }
}
