//! Local binary pattern codes, dense histograms, dominant-pattern
//! dictionaries and feature assembly.

pub mod codes;
pub mod config;
pub mod dictionary;
pub mod feature;
pub mod histogram;
pub mod sampling;

pub use codes::{dominant_direction, lbp_code, rlbp_code};
pub use config::{LbpConfig, Variant};
pub use dictionary::{build_dictionary, select_dominant, DictionaryBuilder, DominantPatternDictionary};
pub use feature::{assemble_feature, project, FeatureExtractor, FeatureLayout, FeatureVector, LayoutSegment};
pub use histogram::{extract_histogram, extract_histogram_pair, PatternCounts, PatternHistogram, SparseHistogram};
pub use sampling::{neighbor_offsets, sample_neighbors};
