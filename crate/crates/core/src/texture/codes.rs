//! Per-pixel pattern codes.

/// Fixed-order code: bit `p` is set iff `samples[p] >= center`.
#[inline]
pub fn lbp_code(samples: &[f64], center: f64) -> u32 {
    samples
        .iter()
        .enumerate()
        .fold(0u32, |code, (p, &g)| code | (u32::from(g >= center) << p))
}

/// Index of the neighbor with the largest absolute difference from the
/// center. Ties keep the smallest index.
#[inline]
pub fn dominant_direction(samples: &[f64], center: f64) -> usize {
    let mut best = 0;
    let mut best_mag = f64::NEG_INFINITY;
    for (p, &g) in samples.iter().enumerate() {
        let mag = (g - center).abs();
        if mag > best_mag {
            best_mag = mag;
            best = p;
        }
    }
    best
}

/// Rotates a `points`-bit code right by `shift`, so bit `p` lands on
/// `(p - shift) mod points`.
#[inline]
pub fn rotate_code(code: u32, shift: usize, points: usize) -> u32 {
    if shift == 0 {
        return code;
    }
    let mask = if points == 32 { u32::MAX } else { (1u32 << points) - 1 };
    ((code >> shift) | (code << (points - shift))) & mask
}

/// Code with weights rotated to start at the dominant direction.
#[inline]
pub fn rlbp_code(samples: &[f64], center: f64) -> u32 {
    let d = dominant_direction(samples, center);
    rotate_code(lbp_code(samples, center), d, samples.len())
}
