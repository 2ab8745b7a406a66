use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::texture::{FeatureLayout, FeatureVector};

/// Patch class. `Tumor` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Tumor,
    NotTumor,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Tumor => "tumor",
            Label::NotTumor => "not_tumor",
        }
    }

    pub fn is_tumor(self) -> bool {
        self == Label::Tumor
    }

    /// +1 for tumor, -1 otherwise.
    pub fn sign(self) -> f64 {
        if self.is_tumor() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tumor" => Ok(Label::Tumor),
            "not_tumor" | "not-tumor" | "nottumor" => Ok(Label::NotTumor),
            other => Err(Error::Dataset(format!("unknown label {other:?}"))),
        }
    }
}

/// Labeled feature matrix sharing one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    layout: FeatureLayout,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    ids: Vec<String>,
}

impl Dataset {
    pub fn new(layout: FeatureLayout, rows: Vec<Vec<f64>>, labels: Vec<Label>, ids: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dataset("dataset is empty".into()));
        }
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(Error::Dataset(format!(
                "{} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                ids.len()
            )));
        }
        let dim = layout.dim();
        if dim == 0 {
            return Err(Error::Dataset("feature dimension is zero".into()));
        }
        for (row, id) in rows.iter().zip(&ids) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("row {id:?} has a non-finite feature")));
            }
        }
        Ok(Self {
            layout,
            rows,
            labels,
            ids,
        })
    }

    /// Builds from feature vectors, checking each against `layout`.
    pub fn from_vectors(
        layout: FeatureLayout,
        vectors: Vec<FeatureVector>,
        labels: Vec<Label>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let hash = layout.hash();
        let mut rows = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.layout_hash != hash {
                return Err(Error::LayoutMismatch {
                    expected: hash,
                    found: v.layout_hash,
                });
            }
            rows.push(v.values);
        }
        Self::new(layout, rows, labels, ids)
    }

    /// Raw matrix with an opaque layout, for data not built from dictionaries.
    pub fn from_matrix(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(FeatureLayout::opaque(dim), rows, labels, ids)
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.layout.clone(),
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.ids[i].clone()).collect(),
        )
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.count(Label::Tumor) == 0 || self.count(Label::NotTumor) == 0 {
            return Err(Error::Dataset("training needs both tumor and not_tumor rows".into()));
        }
        Ok(())
    }
}
