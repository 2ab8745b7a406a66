//! Classifier specs, trained models and the versioned model file.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{Dataset, Label};
use super::forest::{grow_forest, ForestParams, ForestState};
use super::knn::{Distance, KnnState};
use super::metrics::{Confusion, EvalReport};
use super::svm::{smo, SmoParams, SvmState};
use crate::error::{Error, Result};
use crate::texture::{FeatureLayout, FeatureVector};

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn default_k() -> usize {
    5
}
fn default_c() -> f64 {
    10.0
}
fn default_tol() -> f64 {
    1e-3
}
fn default_max_iter() -> usize {
    1_000_000
}
fn default_trees() -> usize {
    1000
}
fn default_min_leaf() -> usize {
    1
}

/// Classifier choice and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        metric: Distance,
    },
    Svm {
        #[serde(default = "default_c")]
        c: f64,
        /// RBF width; `None` means `1 / d`.
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    Rf {
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
        /// Features tried per split; `None` means `floor(sqrt(d))`.
        #[serde(default)]
        max_features: Option<usize>,
    },
}

impl ClassifierSpec {
    pub fn knn(k: usize) -> Self {
        ClassifierSpec::Knn {
            k,
            metric: Distance::Euclidean,
        }
    }

    pub fn svm(c: f64, gamma: Option<f64>) -> Self {
        ClassifierSpec::Svm {
            c,
            gamma,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn rf(n_trees: usize, seed: u64) -> Self {
        ClassifierSpec::Rf {
            n_trees,
            seed,
            min_leaf: 1,
            max_features: None,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::Knn { .. } => ModelKind::Knn,
            ClassifierSpec::Svm { .. } => ModelKind::Svm,
            ClassifierSpec::Rf { .. } => ModelKind::Rf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match *self {
            ClassifierSpec::Knn { k: 0, .. } => bad("k must be >= 1"),
            ClassifierSpec::Svm { c, .. } if !(c > 0.0 && c.is_finite()) => bad("C must be positive"),
            ClassifierSpec::Svm { gamma: Some(g), .. } if !(g > 0.0 && g.is_finite()) => bad("gamma must be positive"),
            ClassifierSpec::Svm { tol, .. } if tol.is_nan() || tol <= 0.0 => bad("tol must be positive"),
            ClassifierSpec::Rf { n_trees: 0, .. } => bad("n_trees must be >= 1"),
            ClassifierSpec::Rf { min_leaf: 0, .. } => bad("min_leaf must be >= 1"),
            ClassifierSpec::Rf {
                max_features: Some(0), ..
            } => bad("max_features must be >= 1"),
            _ => Ok(()),
        }
    }
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self::svm(default_c(), None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    Svm,
    Rf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Knn(KnnState),
    Svm(SvmState),
    Rf(ForestState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Tumor fraction (k-NN), logistic of the decision value (SVM) or tumor
    /// vote fraction (RF).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    spec: ClassifierSpec,
    layout: FeatureLayout,
    state: ModelState,
    metadata: Option<serde_json::Value>,
}

pub fn train(ds: &Dataset, spec: &ClassifierSpec) -> Result<TrainedModel> {
    spec.validate()?;
    ds.require_both_classes()?;
    let d = ds.dim();
    let state = match *spec {
        ClassifierSpec::Knn { k, metric } => {
            if k > ds.len() {
                return Err(Error::Config(format!("k = {k} exceeds {} training rows", ds.len())));
            }
            ModelState::Knn(KnnState {
                k,
                metric,
                rows: ds.rows().to_vec(),
                labels: ds.labels().to_vec(),
            })
        }
        ClassifierSpec::Svm {
            c,
            gamma,
            tol,
            max_iter,
        } => {
            let gamma = gamma.unwrap_or(1.0 / d as f64);
            let params = SmoParams {
                c,
                gamma,
                tol,
                max_iter,
                trace: false,
            };
            ModelState::Svm(smo(ds.rows(), ds.labels(), params).state)
        }
        ClassifierSpec::Rf {
            n_trees,
            seed,
            min_leaf,
            max_features,
        } => {
            let max_features = max_features.unwrap_or(((d as f64).sqrt() as usize).max(1)).min(d);
            let params = ForestParams {
                n_trees,
                seed,
                max_features,
                min_leaf,
            };
            ModelState::Rf(grow_forest(ds.rows(), ds.labels(), params))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        layout: ds.layout().clone(),
        state,
        metadata: None,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    /// Free-form provenance stored next to the payload.
    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Content hash of the serialized model, first 16 hex digits.
    pub fn id(&self) -> String {
        let text = self.to_json().expect("model serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        let expected = self.layout.hash();
        if x.layout_hash != expected {
            let dicts: Vec<&str> = self
                .layout
                .segments
                .iter()
                .map(|s| s.dictionary_hash.as_str())
                .collect();
            return Err(Error::LayoutMismatch {
                expected: format!("{expected} (dictionaries {})", dicts.join(", ")),
                found: x.layout_hash.clone(),
            });
        }
        self.predict_values(&x.values)
    }

    /// Predicts a raw row; only its length is checked.
    pub fn predict_values(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: x.len(),
            });
        }
        Ok(match &self.state {
            ModelState::Knn(s) => {
                let score = s.score(x);
                Prediction {
                    label: label_if(score > 0.5),
                    score,
                }
            }
            ModelState::Svm(s) => {
                let v = s.decision(x);
                Prediction {
                    label: label_if(v > 0.0),
                    score: 1.0 / (1.0 + (-v).exp()),
                }
            }
            ModelState::Rf(s) => {
                let score = s.score(x);
                Prediction {
                    label: label_if(score > 0.5),
                    score,
                }
            }
        })
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        self.check_layout(ds.layout())?;
        ds.rows().par_iter().map(|r| self.predict_values(r)).collect()
    }

    pub fn evaluate(&self, ds: &Dataset) -> Result<EvalReport> {
        let preds = self.predict_dataset(ds)?;
        let c = Confusion::from_pairs(ds.labels().iter().zip(&preds).map(|(&t, p)| (t, p.label)));
        Ok(EvalReport::from_confusion(c))
    }

    fn check_layout(&self, layout: &FeatureLayout) -> Result<()> {
        if layout.hash() != self.layout.hash() {
            return Err(Error::LayoutMismatch {
                expected: self.layout.hash(),
                found: layout.hash(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let payload = match &self.state {
            ModelState::Knn(s) => serde_json::to_value(s)?,
            ModelState::Svm(s) => serde_json::to_value(s)?,
            ModelState::Rf(s) => serde_json::to_value(s)?,
        };
        let env = Envelope {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            hyperparameters: self.spec.clone(),
            layout_hash: self.layout.hash(),
            layout: self.layout.clone(),
            metadata: self.metadata.clone(),
            payload,
        };
        Ok(serde_json::to_string(&env)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(format!("unreadable model: {e}")))?;
        if env.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                env.format_version
            )));
        }
        if env.kind != env.hyperparameters.kind() {
            return Err(Error::ModelFormat("kind disagrees with hyperparameters".into()));
        }
        if env.layout.hash() != env.layout_hash {
            return Err(Error::ModelFormat(
                "layout hash does not match the stored layout".into(),
            ));
        }
        let bad = |e: serde_json::Error| Error::ModelFormat(format!("bad payload: {e}"));
        let state = match env.kind {
            ModelKind::Knn => ModelState::Knn(serde_json::from_value(env.payload).map_err(bad)?),
            ModelKind::Svm => ModelState::Svm(serde_json::from_value(env.payload).map_err(bad)?),
            ModelKind::Rf => ModelState::Rf(serde_json::from_value(env.payload).map_err(bad)?),
        };
        let model = Self {
            spec: env.hyperparameters,
            layout: env.layout,
            state,
            metadata: env.metadata,
        };
        model.check_state()?;
        Ok(model)
    }

    fn check_state(&self) -> Result<()> {
        let d = self.layout.dim();
        let bad = |m: &str| Err(Error::ModelFormat(m.to_string()));
        match &self.state {
            ModelState::Knn(s) => {
                if s.rows.is_empty() || s.rows.len() != s.labels.len() || s.k == 0 || s.k > s.rows.len() {
                    return bad("inconsistent k-NN payload");
                }
                if s.rows.iter().any(|r| r.len() != d) {
                    return bad("k-NN row length differs from layout");
                }
            }
            ModelState::Svm(s) => {
                if s.alpha.len() != s.support_vectors.len() || s.labels.len() != s.alpha.len() {
                    return bad("inconsistent SVM payload");
                }
                if s.alpha.iter().any(|&a| !(a >= 0.0 && a <= s.c)) {
                    return bad("SVM dual coefficient outside [0, C]");
                }
                if s.support_vectors.iter().any(|r| r.len() != d) {
                    return bad("support vector length differs from layout");
                }
            }
            ModelState::Rf(s) => {
                if s.trees.is_empty() {
                    return bad("forest has no trees");
                }
                for t in &s.trees {
                    let n = t.nodes.len() as u32;
                    for node in &t.nodes {
                        match *node {
                            super::forest::Node::Split {
                                feature, left, right, ..
                            } => {
                                if feature as usize >= d || left >= n || right >= n {
                                    return bad("tree node index out of range");
                                }
                            }
                            super::forest::Node::Leaf { tumor, not_tumor } => {
                                if tumor + not_tumor == 0 {
                                    return bad("empty forest leaf");
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn label_if(tumor: bool) -> Label {
    if tumor {
        Label::Tumor
    } else {
        Label::NotTumor
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: ModelKind,
    hyperparameters: ClassifierSpec,
    layout_hash: String,
    layout: FeatureLayout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
    payload: serde_json::Value,
}

/// One cell of an SVM grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
}

/// `folds`-fold cross-validated accuracy of the RBF SVM over
/// `C in {1, 10, 100}` and `gamma in {0.1/d, 1/d, 10/d}`. Row `i` goes to fold
/// `i mod folds`. Returns every cell and the best spec (first maximum).
pub fn grid_search_svm(ds: &Dataset, folds: usize) -> Result<(ClassifierSpec, Vec<GridPoint>)> {
    if folds < 2 || folds > ds.len() {
        return Err(Error::Config(format!(
            "cannot make {folds} folds from {} rows",
            ds.len()
        )));
    }
    let d = ds.dim() as f64;
    let mut grid = Vec::new();
    for c in [1.0, 10.0, 100.0] {
        for g in [0.1 / d, 1.0 / d, 10.0 / d] {
            let mut correct = 0usize;
            for f in 0..folds {
                let (test, train_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|i| i % folds == f);
                let train_ds = ds.subset(&train_idx)?;
                let test_ds = ds.subset(&test)?;
                let model = train(&train_ds, &ClassifierSpec::svm(c, Some(g)))?;
                let r = model.evaluate(&test_ds)?;
                correct += (r.confusion.tp + r.confusion.tn) as usize;
            }
            grid.push(GridPoint {
                c,
                gamma: g,
                accuracy: 100.0 * correct as f64 / ds.len() as f64,
            });
        }
    }
    let best = grid
        .iter()
        .fold(grid[0], |b, p| if p.accuracy > b.accuracy { *p } else { b });
    Ok((ClassifierSpec::svm(best.c, Some(best.gamma)), grid))
}
