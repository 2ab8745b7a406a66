use serde::{Deserialize, Serialize};

use super::raster::{BinaryMask, ScalarImage};

const OTSU_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ThresholdMethod {
    Otsu,
    Fixed(f64),
}

/// Which side of the threshold is foreground: `Above` keeps `v > t`,
/// `Below` keeps `v <= t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Above,
    Below,
}

/// Otsu threshold over a 256-bin histogram spanning the image's value range.
///
/// The returned value is the upper edge of the last bin in the lower class.
/// A constant image returns that constant.
pub fn otsu_threshold(img: &ScalarImage) -> f64 {
    let (lo, hi) = img.range();
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let mut hist = [0u64; OTSU_BINS];
    for &v in img.values() {
        hist[value_bin(v, lo, span)] += 1;
    }
    let best = otsu_bin(&hist);
    lo + (best + 1) as f64 * span / OTSU_BINS as f64
}

#[inline]
pub(crate) fn value_bin(v: f64, lo: f64, span: f64) -> usize {
    (((v - lo) / span * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1)
}

/// Index `k` maximizing the between-class variance when bins `0..=k` form
/// the lower class. Ties keep the smallest `k`.
fn otsu_bin(hist: &[u64; OTSU_BINS]) -> usize {
    let total: u64 = hist.iter().sum();
    let weighted_total: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best = 0;
    let mut best_var = -1.0;
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    for (k, &c) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += c;
        sum0 += k as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (weighted_total - sum0) / w1 as f64;
        let var = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = k;
        }
    }
    best
}

pub fn threshold(img: &ScalarImage, method: ThresholdMethod, polarity: Polarity) -> BinaryMask {
    let t = match method {
        ThresholdMethod::Otsu => otsu_threshold(img),
        ThresholdMethod::Fixed(t) => t,
    };
    let bits = img
        .values()
        .iter()
        .map(|&v| match polarity {
            Polarity::Above => v > t,
            Polarity::Below => v <= t,
        })
        .collect();
    BinaryMask::new(img.width(), img.height(), bits).expect("dimensions copied from source")
}
