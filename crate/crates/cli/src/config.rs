//! Declarative run configuration.

use std::path::Path;

use drlbp_core::imaging::Channel;
use drlbp_core::learn::ClassifierSpec;
use drlbp_core::nuclei::NucleiConfig;
use drlbp_core::pipeline::{CleanupConfig, InferenceConfig, DEFAULT_TILE_SIZE};
use drlbp_core::texture::{LbpConfig, Variant};
use drlbp_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub channel: Channel,
    pub lbp: LbpConfig,
}

fn default_channels() -> Vec<ChannelSpec> {
    vec![
        ChannelSpec {
            channel: Channel::H,
            lbp: LbpConfig::default(),
        },
        ChannelSpec {
            channel: Channel::V,
            lbp: LbpConfig::default(),
        },
    ]
}

/// Every knob of a run. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tile_size: usize,
    pub gate: NucleiConfig,
    pub channels: Vec<ChannelSpec>,
    pub theta: f64,
    pub classifier: ClassifierSpec,
    pub cleanup: CleanupConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
            gate: NucleiConfig::default(),
            channels: default_channels(),
            theta: 0.90,
            classifier: ClassifierSpec::default(),
            cleanup: CleanupConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the `--seed` override. The seed also drives the forest.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
            if let ClassifierSpec::Rf { seed, .. } = &mut self.classifier {
                *seed = s;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::Config("tile_size must be positive".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("at least one channel is required".into()));
        }
        for c in &self.channels {
            c.lbp.validate()?;
            if 2 * c.lbp.margin() >= self.tile_size {
                return Err(Error::Config(format!(
                    "radius {} is too large for {}-pixel tiles",
                    c.lbp.radius, self.tile_size
                )));
            }
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        self.gate.validate()?;
        self.classifier.validate()?;
        if self.cleanup.min_component == 0 {
            return Err(Error::Config("cleanup.min_component must be >= 1".into()));
        }
        Ok(())
    }

    /// Same channels with every descriptor switched to `variant`.
    pub fn channels_with_variant(&self, variant: Variant) -> Vec<ChannelSpec> {
        self.channels
            .iter()
            .map(|c| ChannelSpec {
                channel: c.channel,
                lbp: c.lbp.with_variant(variant),
            })
            .collect()
    }

    pub fn inference(&self) -> InferenceConfig {
        InferenceConfig {
            tile_size: self.tile_size,
            gate: self.gate,
            cleanup: self.cleanup,
        }
    }
}
