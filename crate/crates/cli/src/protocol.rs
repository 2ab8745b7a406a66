//! Descriptor-by-classifier comparison on a train/test patch collection.

use std::fmt;

use drlbp_core::learn::{train, ClassifierSpec, Dataset, EvalReport, Label, ModelKind};
use drlbp_core::texture::{FeatureLayout, Variant};
use drlbp_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::ChannelSpec;
use crate::features::{learn_and_featurize, Fetch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub descriptor: Variant,
    pub classifier: ModelKind,
    pub hyperparameters: ClassifierSpec,
    pub dictionary_sizes: Vec<usize>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn get(&self, descriptor: Variant, classifier: ModelKind) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.descriptor == descriptor && r.classifier == classifier)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<11}{:<6}{:>10}{:>11}{:>9}{:>8}",
            "descriptor", "model", "accuracy", "precision", "recall", "f1"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<11}{:<6}{:>10.2}{:>11.2}{:>9.2}{:>8.2}",
                r.descriptor.to_string().to_uppercase(),
                format!("{:?}", r.classifier).to_lowercase(),
                r.report.accuracy,
                r.report.precision,
                r.report.recall,
                r.report.f1
            )?;
        }
        Ok(())
    }
}

/// Patches `0..n_train` train, the rest test. Dictionaries are learned per
/// descriptor from the training patches only.
pub fn run_comparison(
    n_train: usize,
    fetch: Fetch<'_>,
    labels: &[Label],
    channels: &[ChannelSpec],
    theta: f64,
    descriptors: &[Variant],
    specs: &[ClassifierSpec],
) -> Result<Comparison> {
    let n = labels.len();
    if n_train == 0 || n_train >= n {
        return Err(Error::Dataset(format!("need both splits, got {n_train} train of {n}")));
    }
    let (sets, rows) = learn_and_featurize(n_train, n, fetch, channels, descriptors, theta)?;
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut out = Vec::new();
    for ((dicts, mut rows), &descriptor) in sets.iter().zip(rows).zip(descriptors) {
        let layout = FeatureLayout::from_dictionaries(dicts);
        let test_rows = rows.split_off(n_train);
        let train_ds = Dataset::new(
            layout.clone(),
            rows,
            labels[..n_train].to_vec(),
            ids[..n_train].to_vec(),
        )?;
        let test_ds = Dataset::new(layout, test_rows, labels[n_train..].to_vec(), ids[n_train..].to_vec())?;
        for spec in specs {
            let model = train(&train_ds, spec)?;
            out.push(ComparisonRow {
                descriptor,
                classifier: spec.kind(),
                hyperparameters: spec.clone(),
                dictionary_sizes: dicts.iter().map(|d| d.len()).collect(),
                report: model.evaluate(&test_ds)?,
            });
        }
    }
    Ok(Comparison {
        n_train,
        n_test: n - n_train,
        rows: out,
    })
}
