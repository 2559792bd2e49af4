//! Built-in regression learners: target-mean baseline, ridge/OLS, bagged
//! forest, and an exact-match lookup stub used to wire hand-crafted
//! prediction tables into pipelines.

mod forest;

pub use forest::{ForestLearner, ForestModel};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::model::{Learner, Model};
use ndarray::{Array1, Array2, ArrayView2};

/// Predicts the training-target mean for every row, any input width.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullLearner;

pub struct NullModel {
    mean: f64,
}

impl Model for NullModel {
    fn predict(&self, features: &ArrayView2<f64>) -> Vec<f64> {
        vec![self.mean; features.nrows()]
    }

    fn width(&self) -> Option<usize> {
        None
    }
}

impl Learner for NullLearner {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Model>> {
        let mean = data.target().sum() / data.n() as f64;
        Ok(Box::new(NullModel { mean }))
    }

    fn id(&self) -> String {
        "null".into()
    }
}

/// Penalized least squares: minimizes Σ(y − Xβ − β₀)² + λ‖β‖², with the
/// intercept unpenalized. λ = 0 is ordinary least squares.
#[derive(Debug, Clone, Copy)]
pub struct LinearLearner {
    pub lambda: f64,
}

impl LinearLearner {
    pub fn new(lambda: f64) -> Self {
        LinearLearner { lambda }
    }

    pub fn ols() -> Self {
        LinearLearner { lambda: 0.0 }
    }
}

pub struct LinearModel {
    coefficients: Array1<f64>,
    intercept: f64,
}

impl LinearModel {
    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

impl Model for LinearModel {
    fn predict(&self, features: &ArrayView2<f64>) -> Vec<f64> {
        features
            .rows()
            .into_iter()
            .map(|row| row.dot(&self.coefficients) + self.intercept)
            .collect()
    }

    fn width(&self) -> Option<usize> {
        Some(self.coefficients.len())
    }
}

impl Learner for LinearLearner {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Model>> {
        if self.lambda < 0.0 {
            return Err(Error::contract("ridge penalty must be ≥ 0"));
        }
        let n = data.n();
        let p = data.p();
        let x = data.features();
        let col_means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
        let y_mean = data.target().sum() / n as f64;

        let mut xc = x.clone();
        for j in 0..p {
            for i in 0..n {
                xc[[i, j]] -= col_means[j];
            }
        }
        let yc: Array1<f64> = data.target() - y_mean;

        let mut gram: Array2<f64> = xc.t().dot(&xc);
        for j in 0..p {
            gram[[j, j]] += self.lambda;
        }
        let rhs: Array1<f64> = xc.t().dot(&yc);
        let coefficients = cholesky_solve(&gram, &rhs)?;
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&col_means)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        Ok(Box::new(LinearModel { coefficients, intercept }))
    }

    fn id(&self) -> String {
        format!("linear(lambda={})", self.lambda)
    }
}

/// Predicts the mean target of training rows whose values on `match_features`
/// equal the query row's exactly; falls back to the training mean. Useful as
/// a deterministic stub when exercising pipelines against hand-built tables.
#[derive(Debug, Clone)]
pub struct LookupLearner {
    pub match_features: Vec<String>,
}

pub struct LookupModel {
    columns: Vec<usize>,
    keys: Vec<Vec<f64>>,
    targets: Vec<f64>,
    fallback: f64,
    width: usize,
}

impl Model for LookupModel {
    fn predict(&self, features: &ArrayView2<f64>) -> Vec<f64> {
        features
            .rows()
            .into_iter()
            .map(|row| {
                let mut sum = 0.0;
                let mut count = 0usize;
                for (key, &t) in self.keys.iter().zip(&self.targets) {
                    if self
                        .columns
                        .iter()
                        .enumerate()
                        .all(|(k, &c)| row[c] == key[k])
                    {
                        sum += t;
                        count += 1;
                    }
                }
                if count > 0 {
                    sum / count as f64
                } else {
                    self.fallback
                }
            })
            .collect()
    }

    fn width(&self) -> Option<usize> {
        Some(self.width)
    }
}

impl Learner for LookupLearner {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Model>> {
        let mut columns = Vec::with_capacity(self.match_features.len());
        for name in &self.match_features {
            let idx = data
                .feature_index(name)
                .ok_or_else(|| Error::data(format!("lookup learner: unknown feature '{name}'")))?;
            columns.push(idx);
        }
        if columns.is_empty() {
            return Err(Error::contract("lookup learner needs ≥ 1 match feature"));
        }
        let keys: Vec<Vec<f64>> = (0..data.n())
            .map(|i| columns.iter().map(|&c| data.features()[[i, c]]).collect())
            .collect();
        Ok(Box::new(LookupModel {
            columns,
            keys,
            targets: data.target().to_vec(),
            fallback: data.target().sum() / data.n() as f64,
            width: data.p(),
        }))
    }

    fn id(&self) -> String {
        format!("lookup({})", self.match_features.join(","))
    }
}
