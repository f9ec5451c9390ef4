//! Model-free edge-detector control: Sobel gradient magnitude with an
//! optional Gaussian post-filter.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::attributions::{fmt_param, params_from, Attribution, Flavor};
use crate::error::{dim, invalid, Result};
use crate::math;

/// Pixel with replicated borders.
#[inline]
fn at(img: &[f64], side: usize, y: isize, x: isize) -> f64 {
    let cy = y.clamp(0, side as isize - 1) as usize;
    let cx = x.clamp(0, side as isize - 1) as usize;
    img[cy * side + cx]
}

/// Separable Gaussian blur with replicated borders; `sigma = 0` is a no-op.
fn gaussian_blur(img: &[f64], side: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return img.to_vec();
    }
    let radius = crate::math::ceil(3.0 * sigma) as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut total = 0.0;
    for k in -radius..=radius {
        let v = math::exp(-(k as f64 * k as f64) / (2.0 * sigma * sigma));
        kernel.push(v);
        total += v;
    }
    for v in kernel.iter_mut() {
        *v /= total;
    }
    let mut horizontal = vec![0.0; img.len()];
    for y in 0..side {
        for x in 0..side {
            let mut acc = 0.0;
            for (ki, k) in (-radius..=radius).enumerate() {
                acc += kernel[ki] * at(img, side, y as isize, x as isize + k);
            }
            horizontal[y * side + x] = acc;
        }
    }
    let mut out = vec![0.0; img.len()];
    for y in 0..side {
        for x in 0..side {
            let mut acc = 0.0;
            for (ki, k) in (-radius..=radius).enumerate() {
                acc += kernel[ki] * at(&horizontal, side, y as isize + k, x as isize);
            }
            out[y * side + x] = acc;
        }
    }
    out
}

/// Sobel edge magnitude of a square image, optionally blurred afterwards.
///
/// Purely a function of the pixels; the model never enters. The class tag
/// only marks which score downstream metrics should read.
pub fn sobel_edge(image: &[f64], side: usize, post_sigma: f64, class: u8) -> Result<Attribution> {
    if side == 0 || image.len() != side * side {
        return Err(dim("image", side * side, image.len()));
    }
    if !(post_sigma >= 0.0) || !post_sigma.is_finite() {
        return Err(invalid("post_sigma", "must be finite and non-negative"));
    }
    if class > 1 {
        return Err(invalid("class", "binary models have classes 0 and 1"));
    }
    let mut magnitude = vec![0.0; image.len()];
    for y in 0..side as isize {
        for x in 0..side as isize {
            let p = |dy: isize, dx: isize| at(image, side, y + dy, x + dx);
            let gx = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let gy = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            magnitude[y as usize * side + x as usize] = math::sqrt(gx * gx + gy * gy);
        }
    }
    let values = gaussian_blur(&magnitude, side, post_sigma);
    Ok(Attribution {
        values,
        method: "sobel-edge".to_string(),
        hyperparams: params_from(&[("post_sigma", fmt_param(post_sigma))]),
        target_class: class,
        flavor: Flavor::Local,
    })
}
