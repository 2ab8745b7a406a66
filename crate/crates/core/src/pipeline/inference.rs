use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::{CleanupConfig, Provenance, TileLabel, TileResult, TumorMap};
use super::tiling::{tile_slide, DEFAULT_TILE_SIZE};
use crate::error::{Error, Result};
use crate::imaging::RgbImage;
use crate::learn::TrainedModel;
use crate::nuclei::{cellularity, nucleus_mask, passes_gate, NucleiConfig};
use crate::texture::FeatureExtractor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub tile_size: usize,
    pub gate: NucleiConfig,
    pub cleanup: CleanupConfig,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
            gate: NucleiConfig::default(),
            cleanup: CleanupConfig::default(),
        }
    }
}

/// Gates, featurizes and classifies every tile, then cleans the grid.
///
/// Tiles run in parallel and are gathered by grid position, so the result
/// does not depend on scheduling.
pub fn run_inference(
    slide: &RgbImage,
    model: &TrainedModel,
    extractor: &FeatureExtractor,
    cfg: &InferenceConfig,
) -> Result<TumorMap> {
    cfg.gate.validate()?;
    if model.layout() != extractor.layout() {
        return Err(Error::LayoutMismatch {
            expected: model.layout().hash(),
            found: extractor.layout().hash(),
        });
    }
    let tiling = tile_slide(slide, cfg.tile_size)?;
    let coords: Vec<(usize, usize)> = tiling.coords().collect();
    let tiles = coords
        .par_iter()
        .map(|&(row, col)| {
            classify_tile(slide, &tiling, row, col, model, extractor, &cfg.gate).map_err(|e| Error::Tile {
                row,
                col,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let provenance = Provenance {
        model_id: model.id(),
        model_kind: format!("{:?}", model.kind()).to_lowercase(),
        layout_hash: model.layout().hash(),
        dictionary_hashes: extractor.dictionaries().iter().map(|d| d.hash()).collect(),
        gate: cfg.gate,
        cleanup: cfg.cleanup,
    };
    TumorMap::new(tiling, tiles, provenance)
}

fn classify_tile(
    slide: &RgbImage,
    tiling: &super::SlideTiling,
    row: usize,
    col: usize,
    model: &TrainedModel,
    extractor: &FeatureExtractor,
    gate: &NucleiConfig,
) -> Result<TileResult> {
    let patch = tiling.crop(slide, row, col)?;
    let ratio = cellularity(&nucleus_mask(&patch, gate)?);
    if !passes_gate(ratio, gate.min_ratio) {
        return Ok(TileResult {
            row,
            col,
            label: TileLabel::Skipped,
            score: None,
            cellularity: ratio,
        });
    }
    let features = extractor.extract(&patch)?;
    let p = model.predict(&features)?;
    Ok(TileResult {
        row,
        col,
        label: if p.label.is_tumor() {
            TileLabel::Tumor
        } else {
            TileLabel::NotTumor
        },
        score: Some(p.score),
        cellularity: ratio,
    })
}
