//! Circular neighborhood geometry and interpolated sampling.
//!
//! Neighbor `p` of pixel `(x, y)` sits at `(x + R cos(2 pi p / P), y - R sin(2 pi p / P))`,
//! with y pointing down. Each coordinate within `snap_tol` of an integer is
//! snapped onto it; a point snapped on both axes reads its pixel directly,
//! anything else is bilinearly interpolated from the surrounding pixels.

use super::config::LbpConfig;
use crate::imaging::ScalarImage;

/// Snapped neighbor offsets `(dx, dy)` relative to the center pixel.
pub fn neighbor_offsets(cfg: &LbpConfig) -> Vec<(f64, f64)> {
    let snap = |v: f64| {
        let r = v.round();
        if (v - r).abs() <= cfg.snap_tol {
            r
        } else {
            v
        }
    };
    (0..cfg.points)
        .map(|p| {
            let angle = 2.0 * std::f64::consts::PI * p as f64 / cfg.points as f64;
            (snap(cfg.radius * angle.cos()), snap(-cfg.radius * angle.sin()))
        })
        .collect()
}

/// Bilinear blend in lerp form: exact whenever the blended corners agree.
#[inline]
pub(crate) fn lerp2(a: f64, b: f64, c: f64, d: f64, tx: f64, ty: f64) -> f64 {
    let top = a + tx * (b - a);
    let bottom = c + tx * (d - c);
    top + ty * (bottom - top)
}

/// One neighbor precomputed against a fixed row stride.
///
/// Degenerate axes (zero fractional part) repeat the base offset, so the
/// lerp collapses exactly to a direct read.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tap {
    o00: isize,
    o10: isize,
    o01: isize,
    o11: isize,
    tx: f64,
    ty: f64,
}

impl Tap {
    #[inline]
    pub(crate) fn sample(&self, values: &[f64], center: usize) -> f64 {
        let at = |o: isize| values[(center as isize + o) as usize];
        lerp2(at(self.o00), at(self.o10), at(self.o01), at(self.o11), self.tx, self.ty)
    }
}

/// Neighborhood taps laid out for images of a given width.
#[derive(Debug, Clone)]
pub(crate) struct SamplingKernel {
    pub taps: Vec<Tap>,
}

impl SamplingKernel {
    pub(crate) fn new(cfg: &LbpConfig, stride: usize) -> Self {
        let stride = stride as isize;
        let taps = neighbor_offsets(cfg)
            .into_iter()
            .map(|(dx, dy)| {
                let (x0, y0) = (dx.floor(), dy.floor());
                let (tx, ty) = (dx - x0, dy - y0);
                let o00 = y0 as isize * stride + x0 as isize;
                let o10 = if tx > 0.0 { o00 + 1 } else { o00 };
                let (o01, o11) = if ty > 0.0 {
                    (o00 + stride, o10 + stride)
                } else {
                    (o00, o10)
                };
                Tap {
                    o00,
                    o10,
                    o01,
                    o11,
                    tx,
                    ty,
                }
            })
            .collect();
        Self { taps }
    }
}

/// Samples the `P` neighbors of `(x, y)`.
///
/// # Panics
/// If `(x, y)` lies closer than `ceil(R)` to the image border.
pub fn sample_neighbors(img: &ScalarImage, x: usize, y: usize, cfg: &LbpConfig) -> Vec<f64> {
    let m = cfg.margin();
    assert!(
        x >= m && y >= m && x + m < img.width() && y + m < img.height(),
        "({x}, {y}) is within {m} pixels of the border of a {}x{} image",
        img.width(),
        img.height()
    );
    let kernel = SamplingKernel::new(cfg, img.width());
    let center = y * img.width() + x;
    kernel.taps.iter().map(|t| t.sample(img.values(), center)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Channel;
    use crate::texture::Variant;

    fn cfg(points: usize, radius: f64) -> LbpConfig {
        LbpConfig::new(points, radius, Variant::Lbp).unwrap()
    }

    #[test]
    fn axis_neighbors_are_read_directly() {
        let img = ScalarImage::from_fn(5, 5, Channel::Gray, |x, y| (10 * y + x) as f64).unwrap();
        let s = sample_neighbors(&img, 2, 2, &cfg(4, 1.0));
        // east, north, west, south
        assert_eq!(s, vec![23.0, 12.0, 21.0, 32.0]);
    }

    #[test]
    fn constant_image_samples_are_exact() {
        let img = ScalarImage::from_fn(13, 13, Channel::H, |_, _| 0.1 + 0.2).unwrap();
        for (p, r) in [(8, 1.0), (12, 2.0), (16, 3.0), (7, 2.5)] {
            let s = sample_neighbors(&img, 6, 6, &cfg(p, r));
            assert!(s.iter().all(|&v| v == 0.1 + 0.2), "{p},{r}: {s:?}");
        }
    }

    #[test]
    fn diagonal_sample_on_linear_ramp() {
        let img = ScalarImage::from_fn(7, 7, Channel::Gray, |x, y| (x + y) as f64).unwrap();
        let s = sample_neighbors(&img, 3, 3, &cfg(8, 1.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // p = 1 is up-right, p = 3 up-left, p = 5 down-left, p = 7 down-right
        let expected = [6.0 + h - h, 6.0 - h - h, 6.0 - h + h, 6.0 + h + h];
        for (i, p) in [1, 3, 5, 7].into_iter().enumerate() {
            assert!((s[p] - expected[i]).abs() < 1e-12, "p={p}: {} vs {}", s[p], expected[i]);
        }
    }

    #[test]
    fn offsets_snap_to_grid() {
        let o = neighbor_offsets(&cfg(16, 3.0));
        assert_eq!(o[0], (3.0, 0.0));
        assert_eq!(o[4], (0.0, -3.0));
        assert_eq!(o[8], (-3.0, 0.0));
        assert_eq!(o[12], (0.0, 3.0));
        assert!(o[2].0.fract() != 0.0);
    }

    #[test]
    #[should_panic]
    fn border_pixel_is_a_contract_violation() {
        let img = ScalarImage::from_fn(9, 9, Channel::Gray, |_, _| 0.0).unwrap();
        sample_neighbors(&img, 2, 4, &cfg(16, 3.0));
    }
}
