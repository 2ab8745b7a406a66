//! Nucleus masks, cellularity ratios and the minimum-cellularity patch gate.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    threshold, to_h_channel, BinaryMask, Morphology, Polarity, RgbPatch, StructuringElement, ThresholdMethod,
};

/// Patches whose nucleus coverage is strictly below this are rejected.
pub const DEFAULT_MIN_RATIO: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NucleiConfig {
    pub open_radius: usize,
    pub close_radius: usize,
    pub method: ThresholdMethod,
    /// Nuclei are assumed to be the high-H class; flip for stains where
    /// they come out dark in the H channel.
    pub polarity: Polarity,
    pub min_ratio: f64,
}

impl Default for NucleiConfig {
    fn default() -> Self {
        Self {
            open_radius: 2,
            close_radius: 2,
            method: ThresholdMethod::Otsu,
            polarity: Polarity::Above,
            min_ratio: DEFAULT_MIN_RATIO,
        }
    }
}

impl NucleiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_ratio) {
            return Err(Error::Config(format!(
                "min_ratio must lie in [0, 1], got {}",
                self.min_ratio
            )));
        }
        if self.open_radius == 0 || self.close_radius == 0 {
            return Err(Error::Config("morphology radii must be >= 1".into()));
        }
        Ok(())
    }
}

/// H channel -> grayscale opening -> threshold -> binary closing.
pub fn nucleus_mask(patch: &RgbPatch, cfg: &NucleiConfig) -> Result<BinaryMask> {
    let open_se = StructuringElement::disk(cfg.open_radius)?;
    let close_se = StructuringElement::disk(cfg.close_radius)?;
    let h = to_h_channel(patch).open(&open_se);
    Ok(threshold(&h, cfg.method, cfg.polarity).close(&close_se))
}

pub fn cellularity(mask: &BinaryMask) -> f64 {
    mask.count() as f64 / (mask.width() * mask.height()) as f64
}

#[inline]
pub fn passes_gate(ratio: f64, min_ratio: f64) -> bool {
    ratio >= min_ratio
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellularityReport {
    pub patch_id: String,
    pub nucleus_pixels: usize,
    pub total_pixels: usize,
    pub ratio: f64,
    pub accepted: bool,
}

impl CellularityReport {
    pub fn from_mask(patch_id: impl Into<String>, mask: &BinaryMask, min_ratio: f64) -> Self {
        let ratio = cellularity(mask);
        Self {
            patch_id: patch_id.into(),
            nucleus_pixels: mask.count(),
            total_pixels: mask.width() * mask.height(),
            ratio,
            accepted: passes_gate(ratio, min_ratio),
        }
    }
}

pub fn assess(patch_id: impl Into<String>, patch: &RgbPatch, cfg: &NucleiConfig) -> Result<CellularityReport> {
    let mask = nucleus_mask(patch, cfg)?;
    Ok(CellularityReport::from_mask(patch_id, &mask, cfg.min_ratio))
}

/// Accepted patches and every report, in input order.
pub type GateOutcome<'a> = (Vec<&'a (String, RgbPatch)>, Vec<CellularityReport>);

/// Gates `(id, patch)` pairs. Reports come back in input order; accepted
/// patches keep their relative order.
pub fn gate_patches<'a>(patches: &'a [(String, RgbPatch)], cfg: &NucleiConfig) -> Result<GateOutcome<'a>> {
    cfg.validate()?;
    let reports = patches
        .par_iter()
        .map(|(id, patch)| assess(id.clone(), patch, cfg))
        .collect::<Result<Vec<_>>>()?;
    let accepted = patches
        .iter()
        .zip(&reports)
        .filter(|(_, r)| r.accepted)
        .map(|(p, _)| p)
        .collect();
    Ok((accepted, reports))
}

/// CSV with header `patch_id,nucleus_pixels,total_pixels,ratio,accepted`.
pub fn write_report_csv<W: Write>(out: W, reports: &[CellularityReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::RgbImage;

    const NUCLEUS: [u8; 3] = [110, 45, 12];
    const STROMA: [u8; 3] = [232, 176, 200];

    /// 20 radius-10 disks on a 5x4 lattice inside a 600x600 patch, plus the
    /// exact number of disk pixels.
    fn twenty_disks() -> (RgbImage, usize) {
        let mut centers = Vec::new();
        for row in 0..4 {
            for col in 0..5 {
                centers.push((60 + col * 120, 75 + row * 150));
            }
        }
        let inside = |x: usize, y: usize| {
            centers.iter().any(|&(cx, cy)| {
                let (dx, dy) = (x as i64 - cx as i64, y as i64 - cy as i64);
                dx * dx + dy * dy <= 100
            })
        };
        let img = RgbImage::from_fn(600, 600, |x, y| if inside(x, y) { NUCLEUS } else { STROMA }).unwrap();
        let truth = (0..600 * 600).filter(|i| inside(i % 600, i / 600)).count();
        (img, truth)
    }

    #[test]
    fn uniform_patch_has_empty_mask() {
        let patch = RgbImage::filled(50, 40, [200, 120, 180]).unwrap();
        let mask = nucleus_mask(&patch, &NucleiConfig::default()).unwrap();
        assert_eq!((mask.width(), mask.height()), (50, 40));
        assert!(mask.is_empty());
    }

    #[test]
    fn synthetic_disks_are_recovered() {
        let (patch, truth) = twenty_disks();
        // hand count of a radius-10 lattice disk is 317 pixels
        assert_eq!(truth, 20 * 317);
        let mask = nucleus_mask(&patch, &NucleiConfig::default()).unwrap();
        let expected = 20.0 * std::f64::consts::PI * 100.0;
        let got = mask.count() as f64;
        assert!((got - expected).abs() <= 0.05 * expected, "{got} vs {expected}");
        let ratio = cellularity(&mask);
        assert!((ratio - 0.01745).abs() < 0.01745 * 0.05, "{ratio}");
    }

    #[test]
    fn cellularity_extremes() {
        assert_eq!(cellularity(&BinaryMask::filled(600, 600, false).unwrap()), 0.0);
        assert_eq!(cellularity(&BinaryMask::filled(600, 600, true).unwrap()), 1.0);
    }

    #[test]
    fn gate_boundary_is_inclusive() {
        assert!(!passes_gate(0.0299, 0.03));
        assert!(passes_gate(0.03, 0.03));
        // 300 of 10000 pixels is exactly the threshold
        let mask = BinaryMask::from_fn(100, 100, |x, y| y * 100 + x < 300).unwrap();
        let report = CellularityReport::from_mask("p", &mask, DEFAULT_MIN_RATIO);
        assert_eq!(report.ratio, 0.03);
        assert!(report.accepted);
        let mask = BinaryMask::from_fn(100, 100, |x, y| y * 100 + x < 299).unwrap();
        assert!(!CellularityReport::from_mask("p", &mask, DEFAULT_MIN_RATIO).accepted);
    }

    #[test]
    fn gate_preserves_order_and_rejects_background() {
        let (dense, _) = twenty_disks();
        let background = RgbImage::filled(600, 600, STROMA).unwrap();
        // twenty disks cover ~1.8%, so a 1% gate accepts them
        let cfg = NucleiConfig {
            min_ratio: 0.01,
            ..NucleiConfig::default()
        };
        let patches = vec![
            ("a".to_string(), dense.clone()),
            ("b".to_string(), background),
            ("c".to_string(), dense),
        ];
        let (accepted, reports) = gate_patches(&patches, &cfg).unwrap();
        let ids: Vec<_> = accepted.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        let ids: Vec<_> = reports.iter().map(|r| r.patch_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(!reports[1].accepted);
        assert_eq!(reports[1].ratio, 0.0);

        let (accepted, _) = gate_patches(&[], &cfg).unwrap();
        assert!(accepted.is_empty());
    }

    #[test]
    fn report_csv_has_header() {
        let mask = BinaryMask::from_fn(10, 10, |x, _| x < 5).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[CellularityReport::from_mask("r0_c1", &mask, 0.03)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("patch_id,nucleus_pixels,total_pixels,ratio,accepted")
        );
        assert_eq!(lines.next(), Some("r0_c1,50,100,0.5,true"));
    }

    #[test]
    fn mask_is_deterministic() {
        let (patch, _) = twenty_disks();
        let cfg = NucleiConfig::default();
        assert_eq!(nucleus_mask(&patch, &cfg).unwrap(), nucleus_mask(&patch, &cfg).unwrap());
    }
}
