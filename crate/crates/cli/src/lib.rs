//! Command-line layer: run configuration, manifests, feature tables, the
//! synthetic data generator and the `drlbp` subcommands.

pub mod audit;
pub mod bench;
pub mod commands;
pub mod config;
pub mod features;
pub mod manifest;
pub mod protocol;
pub mod synth;
