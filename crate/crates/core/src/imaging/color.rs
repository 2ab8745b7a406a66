//! Scalar channels derived from RGB: violet (V), hematoxylin (H) and luma.

use super::raster::{Channel, RgbImage, ScalarImage};

/// Lower clamp applied to the arctangent denominator of the H channel.
pub const H_EPSILON: f64 = 1e-4;

/// Violet response `0.5 (R + B) / |(R, G, B)|`, zero for black pixels.
#[inline]
pub fn violet(rgb: [u8; 3]) -> f64 {
    let [r, g, b] = rgb.map(f64::from);
    let norm = (r * r + g * g + b * b).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        0.5 * (r + b) / norm
    }
}

/// Unscaled hematoxylin response `R / atan(B / max(R, G))`.
///
/// Zero whenever `R = 0`. The arctangent term is clamped below at
/// [`H_EPSILON`], which also covers `B = 0`.
#[inline]
pub fn hematoxylin_raw(rgb: [u8; 3]) -> f64 {
    let [r, g, b] = rgb.map(f64::from);
    if r == 0.0 {
        return 0.0;
    }
    // r > 0 so the max is positive
    let c3 = (b / r.max(g)).atan().max(H_EPSILON);
    r / c3
}

#[inline]
pub fn luma(rgb: [u8; 3]) -> f64 {
    let [r, g, b] = rgb.map(f64::from);
    0.299 * r + 0.587 * g + 0.114 * b
}

pub fn to_v_channel(patch: &RgbImage) -> ScalarImage {
    map_pixels(patch, Channel::V, violet)
}

/// H channel before the per-patch rescale.
pub fn to_h_channel_raw(patch: &RgbImage) -> ScalarImage {
    map_pixels(patch, Channel::H, hematoxylin_raw)
}

/// H channel, min-max rescaled per patch to `[0, 255]`. A constant raw image
/// maps to all zeros.
pub fn to_h_channel(patch: &RgbImage) -> ScalarImage {
    rescale_to_byte_range(&to_h_channel_raw(patch))
}

pub fn to_gray(patch: &RgbImage) -> ScalarImage {
    map_pixels(patch, Channel::Gray, luma)
}

pub fn to_channel(patch: &RgbImage, channel: Channel) -> ScalarImage {
    match channel {
        Channel::H => to_h_channel(patch),
        Channel::V => to_v_channel(patch),
        Channel::Gray => to_gray(patch),
    }
}

/// Affine min-max rescale onto `[0, 255]`; constant images become zero.
pub fn rescale_to_byte_range(img: &ScalarImage) -> ScalarImage {
    let (lo, hi) = img.range();
    let span = hi - lo;
    let values = if span > 0.0 {
        let scale = 255.0 / span;
        img.values()
            .iter()
            .map(|&v| ((v - lo) * scale).clamp(0.0, 255.0))
            .collect()
    } else {
        vec![0.0; img.values().len()]
    };
    img.with_values(values)
}

fn map_pixels(patch: &RgbImage, channel: Channel, f: impl Fn([u8; 3]) -> f64) -> ScalarImage {
    let values = patch.pixels().iter().map(|&p| f(p)).collect();
    ScalarImage::new(patch.width(), patch.height(), values, channel)
        .expect("pixel transforms are finite and preserve dimensions")
}
