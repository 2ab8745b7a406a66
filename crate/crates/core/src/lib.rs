//! Tumor-region detection in tiled RGB histology images from rotated local
//! binary pattern texture features.
//!
//! The pipeline: tile the slide, gate tiles by nucleus coverage, compute
//! hematoxylin (H) and violet (V) channels, histogram rotated LBP codes per
//! channel, project onto dominant training patterns, classify (k-NN, RBF SVM
//! or random forest), then clean the tile map morphologically.

pub mod error;
pub mod imaging;
pub mod learn;
pub mod nuclei;
pub mod pipeline;
pub mod rng;
pub mod texture;

pub use error::{Error, Result};
