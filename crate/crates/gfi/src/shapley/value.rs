//! Coalition value functions for Shapley importance.
//!
//! A value function assigns a payout to a coalition of groups; the payout
//! depends only on the union of the coalition's feature indices, and
//! v(∅) = 0. Two dataset-backed kinds mirror the importance estimators: a
//! permutation kind (GOPFI with one fixed permutation set for the whole run,
//! so coalition comparisons are paired) and a refitting kind (LOGI with one
//! fixed set of splits). Synthetic kinds exist for games with known structure.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::NullLearner;
use crate::loss::Loss;
use crate::model::{Learner, Model};
use crate::perm::{apply_joint_permutation, draw_permutations};
use crate::resampling::{ge_over_splits, make_splits, ResamplingPlan, Split};
use std::collections::HashMap;
use std::sync::Mutex;

pub trait CoalitionValue: Send + Sync {
    /// Payout of the coalition owning `features` (sorted, deduplicated,
    /// non-empty).
    fn value(&self, features: &[usize]) -> Result<f64>;
}

/// Memoizing wrapper around a [`CoalitionValue`]. The cache is keyed by the
/// feature union, so coalitions with identical unions share one evaluation;
/// values are deterministic, making concurrent duplicate computation benign.
pub struct ValueFunction<'a> {
    inner: &'a dyn CoalitionValue,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<'a> ValueFunction<'a> {
    pub fn new(inner: &'a dyn CoalitionValue) -> Self {
        ValueFunction { inner, cache: Mutex::new(HashMap::new()) }
    }

    /// v of the union; v(∅) = 0 by definition.
    pub fn evaluate(&self, union: &[usize]) -> Result<f64> {
        if union.is_empty() {
            return Ok(0.0);
        }
        if let Some(&hit) = self.cache.lock().unwrap().get(union) {
            return Ok(hit);
        }
        let value = self.inner.value(union)?;
        self.cache
            .lock()
            .unwrap()
            .insert(union.to_vec(), value);
        Ok(value)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

/// GOPFI-based value function: v(S) is the loss saved by keeping S intact
/// while everything else is permuted, relative to permuting everything.
pub struct PermValueFn<'a> {
    model: &'a dyn Model,
    data: &'a Dataset,
    loss: Loss,
    taus: Vec<Vec<usize>>,
    base_preds: Vec<f64>,
    /// Mean loss with every column permuted jointly; group independent.
    all_permuted_mean: f64,
}

impl<'a> PermValueFn<'a> {
    pub fn new(
        model: &'a dyn Model,
        data: &'a Dataset,
        loss: Loss,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        if data.n() < 2 {
            return Err(Error::contract("permutation value function needs ≥ 2 rows"));
        }
        if m == 0 {
            return Err(Error::contract("need m ≥ 1 permutations"));
        }
        if let Some(w) = model.width() {
            if w != data.p() {
                return Err(Error::contract("model width does not match data"));
            }
        }
        let taus = draw_permutations(data.n(), m, seed);
        let base_preds = model.predict(&data.features().view());
        let mut all_permuted = 0.0;
        for tau in &taus {
            for (i, &src) in tau.iter().enumerate() {
                all_permuted += loss.eval(base_preds[src], data.target()[i]);
            }
        }
        let all_permuted_mean = all_permuted / (data.n() * taus.len()) as f64;
        Ok(PermValueFn { model, data, loss, taus, base_preds, all_permuted_mean })
    }
}

impl CoalitionValue for PermValueFn<'_> {
    fn value(&self, features: &[usize]) -> Result<f64> {
        let complement: Vec<usize> =
            (0..self.data.p()).filter(|c| !features.contains(c)).collect();
        let n = self.data.n();
        let mut kept_sum = 0.0;
        for tau in &self.taus {
            let kept = apply_joint_permutation(self.data.features(), &complement, tau);
            let preds = self.model.predict(&kept.view());
            kept_sum += preds
                .iter()
                .zip(self.data.target().iter())
                .map(|(&p, &y)| self.loss.eval(p, y))
                .sum::<f64>();
        }
        let kept_mean = kept_sum / (n * self.taus.len()) as f64;
        Ok(self.all_permuted_mean - kept_mean)
    }
}

/// LOGI-based value function: v(S) is the loss saved by a model refit on S's
/// columns alone, relative to the mean-predicting null model, on shared splits.
pub struct RefitValueFn<'a> {
    learner: &'a dyn Learner,
    data: &'a Dataset,
    loss: Loss,
    splits: Vec<Split>,
    null_mean: f64,
}

impl<'a> RefitValueFn<'a> {
    pub fn new(
        learner: &'a dyn Learner,
        data: &'a Dataset,
        plan: &ResamplingPlan,
        loss: Loss,
    ) -> Result<Self> {
        let splits = make_splits(plan, data.n())?;
        let null = ge_over_splits(&NullLearner, data, &splits, loss)?;
        Ok(RefitValueFn { learner, data, loss, splits, null_mean: null.mean })
    }
}

impl CoalitionValue for RefitValueFn<'_> {
    fn value(&self, features: &[usize]) -> Result<f64> {
        let view = self.data.select_features(features)?;
        let fitted = ge_over_splits(self.learner, &view, &self.splits, self.loss)?;
        Ok(self.null_mean - fitted.mean)
    }
}

/// Synthetic game built from per-feature main effects and explicit
/// interaction terms: v(S) = Σ_{i∈S} main_i + Σ_{T⊆S, |T|≥2} ε_T.
pub struct SyntheticValueFn {
    mains: Vec<f64>,
    interactions: Vec<(Vec<usize>, f64)>,
}

impl SyntheticValueFn {
    pub fn new(mains: Vec<f64>, interactions: Vec<(Vec<usize>, f64)>) -> Self {
        let interactions = interactions
            .into_iter()
            .map(|(mut set, eps)| {
                set.sort_unstable();
                set.dedup();
                (set, eps)
            })
            .collect();
        SyntheticValueFn { mains, interactions }
    }

    pub fn additive(mains: Vec<f64>) -> Self {
        SyntheticValueFn::new(mains, Vec::new())
    }
}

impl CoalitionValue for SyntheticValueFn {
    fn value(&self, features: &[usize]) -> Result<f64> {
        let mut total: f64 = features.iter().map(|&i| self.mains[i]).sum();
        for (set, eps) in &self.interactions {
            if set.iter().all(|i| features.binary_search(i).is_ok()) {
                total += eps;
            }
        }
        Ok(total)
    }
}

/// Game given by an explicit table from feature unions to payouts.
pub struct TableValueFn {
    table: HashMap<Vec<usize>, f64>,
}

impl TableValueFn {
    pub fn new(entries: Vec<(Vec<usize>, f64)>) -> Self {
        let table = entries
            .into_iter()
            .map(|(mut k, v)| {
                k.sort_unstable();
                k.dedup();
                (k, v)
            })
            .collect();
        TableValueFn { table }
    }
}

impl CoalitionValue for TableValueFn {
    fn value(&self, features: &[usize]) -> Result<f64> {
        self.table.get(features).copied().ok_or_else(|| {
            Error::contract(format!("no table entry for coalition {features:?}"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::gopfi_with_taus;
    use ndarray::{Array1, Array2, ArrayView2};

    struct FirstColumn;
    impl Model for FirstColumn {
        fn predict(&self, f: &ArrayView2<f64>) -> Vec<f64> {
            f.column(0).to_vec()
        }
        fn width(&self) -> Option<usize> {
            None
        }
    }

    #[test]
    fn perm_value_matches_gopfi_route() {
        let d = Dataset::new(
            Array2::from_shape_vec((4, 2), vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0]).unwrap(),
            vec!["a".into(), "b".into()],
            Array1::from(vec![0.0, 1.0, 2.0, 3.0]),
        )
        .unwrap();
        let model = FirstColumn;
        let vf = PermValueFn::new(&model, &d, Loss::Mse, 12, 3).unwrap();
        let direct = gopfi_with_taus(
            &model,
            &d,
            &[0],
            &draw_permutations(4, 12, 3),
            Loss::Mse,
        )
        .unwrap();
        assert!((vf.value(&[0]).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn cache_returns_identical_values() {
        let synth = SyntheticValueFn::new(vec![1.0, 2.0], vec![(vec![0, 1], 0.5)]);
        let vf = ValueFunction::new(&synth);
        let first = vf.evaluate(&[0, 1]).unwrap();
        let second = vf.evaluate(&[0, 1]).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, 3.5);
        assert_eq!(vf.cache_len(), 1);
        assert_eq!(vf.evaluate(&[]).unwrap(), 0.0);
    }
}
