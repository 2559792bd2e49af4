//! Resampling plans, split generation, and generalization-error estimation.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::mean_sd;
use crate::loss::Loss;
use crate::model::{Learner, Model};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How to split n rows into train/test pairs. Identical splits are
/// reproduced from the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResamplingPlan {
    KFold { k: usize, seed: u64 },
    Subsampling { repetitions: usize, train_fraction: f64, seed: u64 },
    Bootstrap { repetitions: usize, seed: u64 },
}

impl ResamplingPlan {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResamplingPlan::KFold { k, .. } => {
                if k < 2 {
                    return Err(Error::contract(format!("kfold requires k ≥ 2, got {k}")));
                }
            }
            ResamplingPlan::Subsampling { repetitions, train_fraction, .. } => {
                if repetitions == 0 {
                    return Err(Error::contract("subsampling requires ≥ 1 repetition"));
                }
                if !(train_fraction > 0.0 && train_fraction < 1.0) {
                    return Err(Error::contract(format!(
                        "train fraction must be in (0,1), got {train_fraction}"
                    )));
                }
            }
            ResamplingPlan::Bootstrap { repetitions, .. } => {
                if repetitions == 0 {
                    return Err(Error::contract("bootstrap requires ≥ 1 repetition"));
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        match *self {
            ResamplingPlan::KFold { seed, .. }
            | ResamplingPlan::Subsampling { seed, .. }
            | ResamplingPlan::Bootstrap { seed, .. } => seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ResamplingPlan::KFold { k, .. } => ResamplingPlan::KFold { k, seed },
            ResamplingPlan::Subsampling { repetitions, train_fraction, .. } => {
                ResamplingPlan::Subsampling { repetitions, train_fraction, seed }
            }
            ResamplingPlan::Bootstrap { repetitions, .. } => {
                ResamplingPlan::Bootstrap { repetitions, seed }
            }
        }
    }
}

/// One train/test index pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Generates the train/test index pairs of `plan` for `n` rows.
///
/// A pure function of `(plan, n)`: k-fold test sets partition `0..n`,
/// subsampling draws without replacement, bootstrap trains on an
/// n-with-replacement draw and tests on the out-of-bag rows.
pub fn make_splits(plan: &ResamplingPlan, n: usize) -> Result<Vec<Split>> {
    plan.validate()?;
    if n < 2 {
        return Err(Error::contract(format!("need at least 2 rows, got {n}")));
    }
    match *plan {
        ResamplingPlan::KFold { k, seed } => {
            if n < k {
                return Err(Error::contract(format!("kfold: n = {n} < k = {k}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seed::rng(seed, "kfold", 0));
            let base = n / k;
            let extra = n % k;
            let mut splits = Vec::with_capacity(k);
            let mut start = 0;
            for fold in 0..k {
                let size = base + usize::from(fold < extra);
                let test: Vec<usize> = order[start..start + size].to_vec();
                let train: Vec<usize> = order[..start]
                    .iter()
                    .chain(order[start + size..].iter())
                    .copied()
                    .collect();
                splits.push(Split { train, test });
                start += size;
            }
            Ok(splits)
        }
        ResamplingPlan::Subsampling { repetitions, train_fraction, seed } => {
            let train_size = ((n as f64) * train_fraction).round() as usize;
            let train_size = train_size.clamp(1, n - 1);
            let mut splits = Vec::with_capacity(repetitions);
            for rep in 0..repetitions {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut seed::rng(seed, "subsampling", rep as u64));
                splits.push(Split {
                    train: order[..train_size].to_vec(),
                    test: order[train_size..].to_vec(),
                });
            }
            Ok(splits)
        }
        ResamplingPlan::Bootstrap { repetitions, seed } => {
            let mut splits = Vec::with_capacity(repetitions);
            for rep in 0..repetitions {
                let mut rng = seed::rng(seed, "bootstrap", rep as u64);
                let mut in_bag = vec![false; n];
                let mut train = Vec::with_capacity(n);
                for _ in 0..n {
                    let i = rng.random_range(0..n);
                    train.push(i);
                    in_bag[i] = true;
                }
                let test: Vec<usize> =
                    (0..n).filter(|&i| !in_bag[i]).collect();
                splits.push(Split { train, test });
            }
            Ok(splits)
        }
    }
}

/// Mean loss of `model` on `test`: (1/|test|) Σ L(f̂(x), y).
pub fn estimate_ge(model: &dyn Model, test: &Dataset, loss: Loss) -> Result<f64> {
    if let Some(w) = model.width() {
        if w != test.p() {
            return Err(Error::contract(format!(
                "model width {w} does not match test width {}",
                test.p()
            )));
        }
    }
    let preds = model.predict(&test.features().view());
    for (i, &p) in preds.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite prediction at row {i}"
            )));
        }
    }
    let total: f64 = preds
        .iter()
        .zip(test.target().iter())
        .map(|(&p, &y)| loss.eval(p, y))
        .sum();
    Ok(total / test.n() as f64)
}

/// Per-fold generalization-error estimates under a resampling plan.
#[derive(Debug, Clone)]
pub struct ResampledGe {
    pub mean: f64,
    /// Sample standard deviation over folds (n−1 denominator).
    pub sd: f64,
    pub per_fold: Vec<f64>,
}

/// Fits one model per train split and averages the paired test losses.
pub fn estimate_ge_resampled(
    learner: &dyn Learner,
    data: &Dataset,
    plan: &ResamplingPlan,
    loss: Loss,
) -> Result<ResampledGe> {
    let splits = make_splits(plan, data.n())?;
    ge_over_splits(learner, data, &splits, loss)
}

/// Same as [`estimate_ge_resampled`] but over externally supplied splits, so
/// several estimators can share identical folds.
pub fn ge_over_splits(
    learner: &dyn Learner,
    data: &Dataset,
    splits: &[Split],
    loss: Loss,
) -> Result<ResampledGe> {
    let per_fold: Vec<f64> = splits
        .par_iter()
        .map(|split| -> Result<f64> {
            if split.train.len() < 2 {
                return Err(Error::contract(format!(
                    "fold with {} training rows (need ≥ 2)",
                    split.train.len()
                )));
            }
            let train = data.select_rows(&split.train);
            let test = data.select_rows(&split.test);
            let model = learner.fit(&train)?;
            estimate_ge(model.as_ref(), &test, loss)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, sd) = mean_sd(&per_fold);
    Ok(ResampledGe { mean, sd, per_fold })
}
