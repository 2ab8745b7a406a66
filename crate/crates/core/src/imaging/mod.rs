//! Raster types, color-channel transforms, thresholding and morphology.

pub mod color;
pub mod components;
pub mod io;
pub mod morphology;
pub mod raster;
pub mod threshold;

pub use color::{to_channel, to_gray, to_h_channel, to_h_channel_raw, to_v_channel};
pub use components::{label_components, remove_small_components};
pub use morphology::{MorphOp, Morphology, SeShape, StructuringElement};
pub use raster::{BinaryMask, Channel, RgbImage, RgbPatch, ScalarImage};
pub use threshold::{otsu_threshold, threshold, Polarity, ThresholdMethod};
