//! Learner and model contracts.
//!
//! A [`Learner`] turns a dataset into an immutable fitted [`Model`]; fitting
//! is deterministic given the learner's seed. Fitted models are shared
//! read-only across parallel workers.

use crate::data::Dataset;
use crate::error::Result;
use ndarray::ArrayView2;

/// A fitted, immutable prediction function.
pub trait Model: Send + Sync {
    /// Predicts one value per row. Callers must pass a matrix whose width
    /// matches [`Model::width`] when that returns `Some`.
    fn predict(&self, features: &ArrayView2<f64>) -> Vec<f64>;

    /// Expected input width; `None` accepts any width (e.g. the null model).
    fn width(&self) -> Option<usize>;
}

/// A fitting algorithm.
pub trait Learner: Send + Sync {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Model>>;

    /// Stable identifier including hyperparameters, for report metadata.
    fn id(&self) -> String;
}
