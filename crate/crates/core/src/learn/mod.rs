//! Patch classifiers and classification metrics.

mod dataset;
pub mod forest;
pub mod knn;
mod metrics;
mod model;
pub mod svm;

pub use dataset::{Dataset, Label};
pub use knn::Distance;
pub use metrics::{Confusion, EvalReport};
pub use model::{
    grid_search_svm, train, ClassifierSpec, GridPoint, ModelKind, ModelState, Prediction, TrainedModel,
    MODEL_FORMAT_VERSION,
};
