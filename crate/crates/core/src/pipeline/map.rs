use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::tiling::SlideTiling;
use crate::error::{Error, Result};
use crate::imaging::{remove_small_components, BinaryMask, Morphology, RgbImage, StructuringElement};
use crate::nuclei::NucleiConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileLabel {
    Tumor,
    NotTumor,
    /// Rejected by the cellularity gate; never classified.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileResult {
    pub row: usize,
    pub col: usize,
    pub label: TileLabel,
    /// Classifier score; absent for skipped tiles.
    pub score: Option<f64>,
    pub cellularity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanupConfig {
    pub se: StructuringElement,
    pub min_component: usize,
}

impl Default for CleanupConfig {
    fn default() -> Self {
        Self {
            se: StructuringElement::square(1).expect("radius 1 is valid"),
            min_component: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    pub model_kind: String,
    pub layout_hash: String,
    pub dictionary_hashes: Vec<String>,
    pub gate: NucleiConfig,
    pub cleanup: CleanupConfig,
}

/// Per-tile labels over a slide grid plus the cleaned binary map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumorMap {
    pub tiling: SlideTiling,
    /// Row-major, one entry per tile.
    pub tiles: Vec<TileResult>,
    #[serde(serialize_with = "grid_out", deserialize_with = "grid_in")]
    pub cleaned: BinaryMask,
    pub provenance: Provenance,
}

impl TumorMap {
    /// Map with the cleaned grid computed from `tiles`.
    pub fn new(tiling: SlideTiling, tiles: Vec<TileResult>, provenance: Provenance) -> Result<Self> {
        if tiles.len() != tiling.len() {
            return Err(Error::Dimensions {
                width: tiling.cols,
                height: tiling.rows,
                reason: format!("{} tile results for {} tiles", tiles.len(), tiling.len()),
            });
        }
        let cleaned = BinaryMask::filled(tiling.cols, tiling.rows, false)?;
        let mut map = Self {
            tiling,
            tiles,
            cleaned,
            provenance,
        };
        map.cleaned = clean_grid(&map.raw_positive(), &map.provenance.cleanup);
        Ok(map)
    }

    pub fn tile(&self, row: usize, col: usize) -> &TileResult {
        &self.tiles[row * self.tiling.cols + col]
    }

    /// Tiles labeled tumor before cleanup. Skipped tiles are negative.
    pub fn raw_positive(&self) -> BinaryMask {
        BinaryMask::from_fn(self.tiling.cols, self.tiling.rows, |c, r| {
            self.tile(r, c).label == TileLabel::Tumor
        })
        .expect("grid dims are positive")
    }

    pub fn count(&self, label: TileLabel) -> usize {
        self.tiles.iter().filter(|t| t.label == label).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Opening followed by removal of 4-connected components smaller than
/// `min_component` tiles.
pub fn clean_grid(raw: &BinaryMask, cfg: &CleanupConfig) -> BinaryMask {
    let opened = raw.open(&cfg.se);
    remove_small_components(&opened, cfg.min_component)
}

/// Recomputes the cleaned grid with `cfg`. The raw labels are kept.
pub fn cleanup_map(map: &TumorMap, cfg: &CleanupConfig) -> TumorMap {
    let mut out = map.clone();
    out.provenance.cleanup = *cfg;
    out.cleaned = clean_grid(&map.raw_positive(), cfg);
    out
}

const BACKGROUND: [u8; 3] = [255, 255, 255];
const PAINT: [u8; 3] = [0, 0, 0];

/// Slide-resolution rendering of the cleaned grid: each positive tile paints
/// its footprint black on white, matching the ground-truth convention.
pub fn render_overlay(map: &TumorMap) -> RgbImage {
    let t = &map.tiling;
    RgbImage::from_fn(t.slide_width, t.slide_height, |x, y| {
        let (c, r) = (x / t.tile_size, y / t.tile_size);
        if c < t.cols && r < t.rows && map.cleaned.get(c, r) {
            PAINT
        } else {
            BACKGROUND
        }
    })
    .expect("slide dims are positive")
}

/// Down-scaled overlay with `px_per_tile` pixels per tile side.
pub fn render_thumbnail(map: &TumorMap, px_per_tile: usize) -> RgbImage {
    let t = &map.tiling;
    let s = px_per_tile.max(1);
    RgbImage::from_fn(t.cols * s, t.rows * s, |x, y| {
        if map.cleaned.get(x / s, y / s) {
            PAINT
        } else {
            BACKGROUND
        }
    })
    .expect("grid dims are positive")
}

/// Pixels that differ from the overlay background.
pub fn painted_pixels(overlay: &RgbImage) -> usize {
    overlay.pixels().iter().filter(|&&p| p != BACKGROUND).count()
}

fn grid_out<S: Serializer>(mask: &BinaryMask, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<String> = (0..mask.height())
        .map(|y| {
            (0..mask.width())
                .map(|x| if mask.get(x, y) { '1' } else { '0' })
                .collect()
        })
        .collect();
    rows.serialize(s)
}

fn grid_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BinaryMask, D::Error> {
    use serde::de::Error as _;
    let rows = Vec::<String>::deserialize(d)?;
    let height = rows.len();
    let width = rows.first().map_or(0, String::len);
    let mut bits = Vec::with_capacity(width * height);
    for row in &rows {
        if row.len() != width {
            return Err(D::Error::custom("ragged grid"));
        }
        for ch in row.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(D::Error::custom("grid cells must be 0 or 1")),
            }
        }
    }
    BinaryMask::new(width, height, bits).map_err(D::Error::custom)
}
