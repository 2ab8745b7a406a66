//! Slide tiling, tile-wise inference, map cleanup, overlays and region
//! overlap metrics.

mod inference;
mod map;
mod metrics;
mod tiling;

pub use inference::{run_inference, InferenceConfig};
pub use map::{
    clean_grid, cleanup_map, painted_pixels, render_overlay, render_thumbnail, CleanupConfig, Provenance, TileLabel,
    TileResult, TumorMap,
};
pub use metrics::{region_metrics, truth_to_grid, RegionMetrics};
pub use tiling::{tile_slide, SlideTiling, DEFAULT_TILE_SIZE};
