//! Dense pattern histograms over every interior pixel of a channel.

use serde::{Deserialize, Serialize};

use super::codes::rotate_code;
use super::config::{LbpConfig, Variant};
use super::sampling::SamplingKernel;
use crate::error::{Error, Result};
use crate::imaging::{Channel, ScalarImage};

/// Read access to pattern counts, dense or sparse.
pub trait PatternCounts {
    fn channel(&self) -> Channel;
    fn config(&self) -> &LbpConfig;
    fn count(&self, pattern: u32) -> u64;
    fn total(&self) -> u64;
    /// Visits every nonzero bin in ascending pattern order.
    fn for_each_nonzero(&self, f: &mut dyn FnMut(u32, u64));
}

/// Dense `2^P`-bin histogram of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternHistogram {
    counts: Vec<u32>,
    channel: Channel,
    config: LbpConfig,
}

impl PatternHistogram {
    pub fn from_counts(counts: Vec<u32>, channel: Channel, config: LbpConfig) -> Result<Self> {
        config.validate()?;
        if counts.len() != config.bins() {
            return Err(Error::Config(format!(
                "histogram has {} bins, P = {} needs {}",
                counts.len(),
                config.points,
                config.bins()
            )));
        }
        Ok(Self {
            counts,
            channel,
            config,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn to_sparse(&self) -> SparseHistogram {
        SparseHistogram {
            entries: self
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i as u32, c))
                .collect(),
            channel: self.channel,
            config: self.config,
        }
    }
}

impl PatternCounts for PatternHistogram {
    fn channel(&self) -> Channel {
        self.channel
    }

    fn config(&self) -> &LbpConfig {
        &self.config
    }

    fn count(&self, pattern: u32) -> u64 {
        self.counts.get(pattern as usize).map_or(0, |&c| u64::from(c))
    }

    fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    fn for_each_nonzero(&self, f: &mut dyn FnMut(u32, u64)) {
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                f(i as u32, u64::from(c));
            }
        }
    }
}

/// Nonzero bins only, sorted by pattern index. Same content as the dense form
/// at a fraction of the memory for `P = 16`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseHistogram {
    entries: Vec<(u32, u32)>,
    channel: Channel,
    config: LbpConfig,
}

impl SparseHistogram {
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }
}

impl PatternCounts for SparseHistogram {
    fn channel(&self) -> Channel {
        self.channel
    }

    fn config(&self) -> &LbpConfig {
        &self.config
    }

    fn count(&self, pattern: u32) -> u64 {
        self.entries
            .binary_search_by_key(&pattern, |&(p, _)| p)
            .map_or(0, |i| u64::from(self.entries[i].1))
    }

    fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    fn for_each_nonzero(&self, f: &mut dyn FnMut(u32, u64)) {
        for &(p, c) in &self.entries {
            f(p, u64::from(c));
        }
    }
}

fn check_size(img: &ScalarImage, cfg: &LbpConfig) -> Result<()> {
    cfg.validate()?;
    let min = 2 * cfg.margin();
    if img.width() <= min || img.height() <= min {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            radius: cfg.radius,
            min,
        });
    }
    Ok(())
}

/// Calls `sink(lbp, rlbp)` for every interior pixel in raster order.
fn for_each_code(img: &ScalarImage, cfg: &LbpConfig, mut sink: impl FnMut(u32, u32)) {
    let (w, h) = (img.width(), img.height());
    let m = cfg.margin();
    let n = cfg.points;
    let kernel = SamplingKernel::new(cfg, w);
    let values = img.values();
    for y in m..h - m {
        let row = y * w;
        for x in m..w - m {
            let center_idx = row + x;
            let center = values[center_idx];
            let mut code = 0u32;
            let mut dominant = 0usize;
            let mut best = f64::NEG_INFINITY;
            for (p, tap) in kernel.taps.iter().enumerate() {
                let g = tap.sample(values, center_idx);
                code |= u32::from(g >= center) << p;
                let mag = (g - center).abs();
                if mag > best {
                    best = mag;
                    dominant = p;
                }
            }
            sink(code, rotate_code(code, dominant, n));
        }
    }
}

/// One code per pixel at least `ceil(R)` from every border, binned into
/// `2^P` counts. `cfg.variant` selects fixed or rotated weights.
pub fn extract_histogram(img: &ScalarImage, cfg: &LbpConfig) -> Result<PatternHistogram> {
    check_size(img, cfg)?;
    let mut counts = vec![0u32; cfg.bins()];
    match cfg.variant {
        Variant::Lbp => for_each_code(img, cfg, |lbp, _| counts[lbp as usize] += 1),
        Variant::Rlbp => for_each_code(img, cfg, |_, rlbp| counts[rlbp as usize] += 1),
    }
    PatternHistogram::from_counts(counts, img.channel(), *cfg)
}

/// Both variants from a single sampling pass: `(lbp, rlbp)`.
pub fn extract_histogram_pair(img: &ScalarImage, cfg: &LbpConfig) -> Result<(PatternHistogram, PatternHistogram)> {
    check_size(img, cfg)?;
    let mut lbp = vec![0u32; cfg.bins()];
    let mut rlbp = vec![0u32; cfg.bins()];
    for_each_code(img, cfg, |a, b| {
        lbp[a as usize] += 1;
        rlbp[b as usize] += 1;
    });
    Ok((
        PatternHistogram::from_counts(lbp, img.channel(), cfg.with_variant(Variant::Lbp))?,
        PatternHistogram::from_counts(rlbp, img.channel(), cfg.with_variant(Variant::Rlbp))?,
    ))
}
