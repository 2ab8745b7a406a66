//! Dominant-pattern selection from summed training histograms.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{LbpConfig, Variant};
use super::histogram::PatternCounts;
use crate::error::{Error, Result};
use crate::imaging::Channel;

/// The `M` most frequent training patterns of one channel, most frequent first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantPatternDictionary {
    pub channel: Channel,
    #[serde(rename = "P")]
    pub points: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub variant: Variant,
    #[serde(default = "crate::texture::config::default_snap_tol")]
    pub snap_tol: f64,
    pub theta: f64,
    pub selected: Vec<u32>,
}

impl DominantPatternDictionary {
    pub fn config(&self) -> LbpConfig {
        LbpConfig {
            points: self.points,
            radius: self.radius,
            variant: self.variant,
            snap_tol: self.snap_tol,
        }
    }

    /// `M`, the number of selected patterns.
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Content hash (SHA-256 of the canonical JSON, first 16 hex digits).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("dictionary serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        self.config().validate()?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.selected.is_empty() {
            return Err(Error::Config("dictionary selects no patterns".into()));
        }
        let bins = self.config().bins() as u32;
        let mut seen = std::collections::HashSet::new();
        for &p in &self.selected {
            if p >= bins || !seen.insert(p) {
                return Err(Error::Config(format!("invalid or duplicate pattern index {p}")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dict: Self = serde_json::from_str(&text)?;
        dict.validate()?;
        Ok(dict)
    }
}

/// Streaming sum of training histograms for one channel.
#[derive(Debug, Clone)]
pub struct DictionaryBuilder {
    channel: Channel,
    config: LbpConfig,
    sums: Vec<u64>,
}

impl DictionaryBuilder {
    pub fn new(channel: Channel, config: LbpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            channel,
            config,
            sums: vec![0; config.bins()],
        })
    }

    pub fn add(&mut self, hist: &impl PatternCounts) -> Result<()> {
        if hist.channel() != self.channel {
            return Err(Error::ChannelMismatch {
                expected: self.channel.to_string(),
                found: hist.channel().to_string(),
            });
        }
        if hist.config() != &self.config {
            return Err(Error::Config(format!(
                "histogram config {:?} differs from dictionary config {:?}",
                hist.config(),
                self.config
            )));
        }
        let sums = &mut self.sums;
        hist.for_each_nonzero(&mut |p, c| sums[p as usize] += c);
        Ok(())
    }

    /// Merges another partial sum (for parallel reductions).
    pub fn merge(mut self, other: &DictionaryBuilder) -> Result<Self> {
        if other.channel != self.channel || other.config != self.config {
            return Err(Error::Config(
                "cannot merge builders of different channels/configs".into(),
            ));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        Ok(self)
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    pub fn finish(&self, theta: f64) -> Result<DominantPatternDictionary> {
        let selected = select_dominant(&self.sums, theta)?;
        Ok(DominantPatternDictionary {
            channel: self.channel,
            points: self.config.points,
            radius: self.config.radius,
            variant: self.config.variant,
            snap_tol: self.config.snap_tol,
            theta,
            selected,
        })
    }
}

/// Sorts bins by descending count (ties by ascending index) and keeps the
/// shortest prefix whose share of the total mass reaches `theta`.
pub fn select_dominant(sums: &[u64], theta: f64) -> Result<Vec<u32>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config(format!("theta must lie in (0, 1], got {theta}")));
    }
    let total: u64 = sums.iter().sum();
    if total == 0 {
        return Err(Error::EmptyTrainingMass);
    }
    let mut order: Vec<u32> = (0..sums.len() as u32).filter(|&p| sums[p as usize] > 0).collect();
    order.sort_unstable_by(|&a, &b| sums[b as usize].cmp(&sums[a as usize]).then(a.cmp(&b)));

    let mut cumulative = 0u64;
    for (m, &p) in order.iter().enumerate() {
        cumulative += sums[p as usize];
        if cumulative as f64 / total as f64 >= theta {
            order.truncate(m + 1);
            return Ok(order);
        }
    }
    // unreachable: the full prefix has share exactly 1
    Ok(order)
}

/// Sums `histograms` and selects the dominant patterns.
pub fn build_dictionary<H: PatternCounts>(histograms: &[H], theta: f64) -> Result<DominantPatternDictionary> {
    let first = histograms.first().ok_or(Error::EmptyTrainingMass)?;
    let mut builder = DictionaryBuilder::new(first.channel(), *first.config())?;
    for h in histograms {
        builder.add(h)?;
    }
    builder.finish(theta)
}
