//! Projection onto dominant patterns and per-channel concatenation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dictionary::DominantPatternDictionary;
use super::histogram::{extract_histogram, PatternCounts};
use crate::error::{Error, Result};
use crate::imaging::{to_channel, Channel, RgbPatch};

/// Counts at the dictionary's patterns, in dictionary order, L1-normalized.
/// A histogram with no mass on any selected pattern projects to zeros.
pub fn project(hist: &impl PatternCounts, dict: &DominantPatternDictionary) -> Result<Vec<f64>> {
    if hist.channel() != dict.channel {
        return Err(Error::ChannelMismatch {
            expected: dict.channel.to_string(),
            found: hist.channel().to_string(),
        });
    }
    if hist.config() != &dict.config() {
        return Err(Error::Config(format!(
            "histogram config {:?} does not match dictionary config {:?}",
            hist.config(),
            dict.config()
        )));
    }
    let raw: Vec<u64> = dict.selected.iter().map(|&p| hist.count(p)).collect();
    let total: u64 = raw.iter().sum();
    Ok(if total == 0 {
        vec![0.0; raw.len()]
    } else {
        let total = total as f64;
        raw.into_iter().map(|c| c as f64 / total).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSegment {
    pub channel: Channel,
    pub len: usize,
    pub dictionary_hash: String,
}

/// Ordered channel segments of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub segments: Vec<LayoutSegment>,
}

impl FeatureLayout {
    pub fn from_dictionaries(dicts: &[DominantPatternDictionary]) -> Self {
        Self {
            segments: dicts
                .iter()
                .map(|d| LayoutSegment {
                    channel: d.channel,
                    len: d.len(),
                    dictionary_hash: d.hash(),
                })
                .collect(),
        }
    }

    /// Single-segment layout for raw feature matrices that did not come from
    /// dictionaries (toy data, external features).
    pub fn opaque(dim: usize) -> Self {
        Self {
            segments: vec![LayoutSegment {
                channel: Channel::Gray,
                len: dim,
                dictionary_hash: "opaque".into(),
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.segments.iter().map(|s| s.channel).collect()
    }

    /// Identity of the channel order and the dictionaries behind it.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.segments {
            hasher.update(format!("{}:{}:{};", s.channel, s.len, s.dictionary_hash));
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout_hash: String,
}

/// Concatenates per-channel projections in layout order.
pub fn assemble_feature(layout: &FeatureLayout, projections: &[(Channel, Vec<f64>)]) -> Result<FeatureVector> {
    let found: Vec<Channel> = projections.iter().map(|(c, _)| *c).collect();
    if found != layout.channels() {
        return Err(Error::LayoutMismatch {
            expected: format!("channels {:?}", layout.channels()),
            found: format!("channels {found:?}"),
        });
    }
    let mut values = Vec::with_capacity(layout.dim());
    for (seg, (_, proj)) in layout.segments.iter().zip(projections) {
        if proj.len() != seg.len {
            return Err(Error::DimensionMismatch {
                expected: seg.len,
                found: proj.len(),
            });
        }
        values.extend_from_slice(proj);
    }
    Ok(FeatureVector {
        values,
        layout_hash: layout.hash(),
    })
}

/// RGB patch to feature vector, given one dictionary per channel in order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    dictionaries: Vec<DominantPatternDictionary>,
    layout: FeatureLayout,
}

impl FeatureExtractor {
    pub fn new(dictionaries: Vec<DominantPatternDictionary>) -> Result<Self> {
        if dictionaries.is_empty() {
            return Err(Error::Config("feature extractor needs at least one dictionary".into()));
        }
        for d in &dictionaries {
            d.validate()?;
        }
        let layout = FeatureLayout::from_dictionaries(&dictionaries);
        Ok(Self { dictionaries, layout })
    }

    pub fn dictionaries(&self) -> &[DominantPatternDictionary] {
        &self.dictionaries
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn extract(&self, patch: &RgbPatch) -> Result<FeatureVector> {
        let mut projections = Vec::with_capacity(self.dictionaries.len());
        for dict in &self.dictionaries {
            let channel = to_channel(patch, dict.channel);
            let hist = extract_histogram(&channel, &dict.config())?;
            projections.push((dict.channel, project(&hist, dict)?));
        }
        assemble_feature(&self.layout, &projections)
    }
}
