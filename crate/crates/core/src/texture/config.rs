use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported neighbor count; keeps the dense histogram at 2^24 bins.
pub const MAX_POINTS: usize = 24;

pub const DEFAULT_SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Fixed-order weights.
    Lbp,
    /// Weights rotated to start at the dominant direction.
    Rlbp,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Lbp => "lbp",
            Variant::Rlbp => "rlbp",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbp" => Ok(Variant::Lbp),
            "rlbp" | "drlbp" => Ok(Variant::Rlbp),
            other => Err(Error::Config(format!("unknown descriptor variant '{other}'"))),
        }
    }
}

/// Circular neighborhood parameters of the descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbpConfig {
    #[serde(rename = "P")]
    pub points: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub variant: Variant,
    #[serde(default = "default_snap_tol")]
    pub snap_tol: f64,
}

pub(crate) fn default_snap_tol() -> f64 {
    DEFAULT_SNAP_TOL
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self {
            points: 16,
            radius: 3.0,
            variant: Variant::Rlbp,
            snap_tol: DEFAULT_SNAP_TOL,
        }
    }
}

impl LbpConfig {
    pub fn new(points: usize, radius: f64, variant: Variant) -> Result<Self> {
        let cfg = Self {
            points,
            radius,
            variant,
            snap_tol: DEFAULT_SNAP_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        Self { variant, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(4..=MAX_POINTS).contains(&self.points) {
            return Err(Error::Config(format!(
                "neighbor count P must lie in [4, {MAX_POINTS}], got {}",
                self.points
            )));
        }
        if !(self.radius.is_finite() && self.radius >= 1.0) {
            return Err(Error::Config(format!("radius R must be >= 1, got {}", self.radius)));
        }
        if !(self.snap_tol.is_finite() && (0.0..0.5).contains(&self.snap_tol)) {
            return Err(Error::Config(format!(
                "snap_tol must lie in [0, 0.5), got {}",
                self.snap_tol
            )));
        }
        Ok(())
    }

    /// Number of histogram bins, `2^P`.
    pub fn bins(&self) -> usize {
        1 << self.points
    }

    /// Border width skipped on every side, `ceil(R)`.
    pub fn margin(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Same neighborhood geometry (variant ignored).
    pub fn same_geometry(&self, other: &LbpConfig) -> bool {
        self.points == other.points && self.radius == other.radius && self.snap_tol == other.snap_tol
    }
}
