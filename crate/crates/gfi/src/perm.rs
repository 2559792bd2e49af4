//! Permutation-based importance: single-feature PFI, grouped GPFI, and
//! group-only GOPFI.
//!
//! All columns of a group are permuted jointly with one shared row reordering
//! per repetition, so within-group dependence survives the shuffle. One
//! permutation set is reused across every group of a report, which keeps the
//! Monte-Carlo noise paired when comparing groups.

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::model::{Learner, Model};
use crate::report::{GroupScore, ImportanceReport};
use crate::resampling::{make_splits, ResamplingPlan};
use crate::seed;
use itertools::Itertools;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PermConfig {
    /// Monte-Carlo permutation repetitions.
    pub m: usize,
    pub seed: u64,
    /// Divide each group score by |G|.
    pub normalize: bool,
}

impl Default for PermConfig {
    fn default() -> Self {
        PermConfig { m: 50, seed: 0, normalize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermMethod {
    Gpfi,
    Gopfi,
}

impl PermMethod {
    pub fn id(self) -> &'static str {
        match self {
            PermMethod::Gpfi => "gpfi",
            PermMethod::Gopfi => "gopfi",
        }
    }
}

/// Draws `m` uniform permutations of `0..n` (identity included).
pub fn draw_permutations(n: usize, m: usize, seed_value: u64) -> Vec<Vec<usize>> {
    (0..m)
        .map(|k| {
            let mut tau: Vec<usize> = (0..n).collect();
            tau.shuffle(&mut seed::rng(seed_value, "perm-tau", k as u64));
            tau
        })
        .collect()
}

/// All n! permutations of `0..n`, for oracle-grade estimates on tiny data.
pub fn exhaustive_permutations(n: usize) -> Result<Vec<Vec<usize>>> {
    if n > 8 {
        return Err(Error::contract(format!(
            "exhaustive permutation enumeration capped at n = 8, got {n}"
        )));
    }
    Ok((0..n).permutations(n).collect())
}

/// Copy of `x` with the listed columns jointly reordered by `tau`:
/// `out[i][c] = x[tau[i]][c]` for `c` in `cols`.
pub(crate) fn apply_joint_permutation(
    x: &Array2<f64>,
    cols: &[usize],
    tau: &[usize],
) -> Array2<f64> {
    let mut out = x.clone();
    for &c in cols {
        for i in 0..x.nrows() {
            out[[i, c]] = x[[tau[i], c]];
        }
    }
    out
}

fn validate(model: &dyn Model, data: &Dataset, group: &[usize]) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::contract("permutation needs at least 2 rows"));
    }
    if group.is_empty() {
        return Err(Error::contract("group must be non-empty"));
    }
    if let Some(&bad) = group.iter().find(|&&j| j >= data.p()) {
        return Err(Error::contract(format!(
            "feature index {bad} out of range (p = {})",
            data.p()
        )));
    }
    if let Some(w) = model.width() {
        if w != data.p() {
            return Err(Error::contract(format!(
                "model width {w} does not match data width {}",
                data.p()
            )));
        }
    }
    Ok(())
}

fn loss_sum(loss: Loss, preds: &[f64], ys: &ndarray::Array1<f64>) -> f64 {
    preds.iter().zip(ys.iter()).map(|(&p, &y)| loss.eval(p, y)).sum()
}

/// GPFI over an explicit permutation set (unnormalized).
pub fn gpfi_with_taus(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    taus: &[Vec<usize>],
    loss: Loss,
) -> Result<f64> {
    validate(model, data, group)?;
    let base_preds = model.predict(&data.features().view());
    let base_sum = loss_sum(loss, &base_preds, data.target());
    let totals: Vec<f64> = taus
        .par_iter()
        .map(|tau| {
            let permuted = apply_joint_permutation(data.features(), group, tau);
            let preds = model.predict(&permuted.view());
            loss_sum(loss, &preds, data.target()) - base_sum
        })
        .collect();
    Ok(totals.iter().sum::<f64>() / (data.n() * taus.len()) as f64)
}

/// GOPFI over an explicit permutation set (unnormalized).
///
/// Per repetition: loss after permuting every column jointly by τ, minus loss
/// after keeping the group and permuting the rest by the same τ.
pub fn gopfi_with_taus(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    taus: &[Vec<usize>],
    loss: Loss,
) -> Result<f64> {
    if group.is_empty() {
        return Ok(0.0);
    }
    validate(model, data, group)?;
    let base_preds = model.predict(&data.features().view());
    let complement: Vec<usize> = (0..data.p()).filter(|c| !group.contains(c)).collect();
    let totals: Vec<f64> = taus
        .par_iter()
        .map(|tau| {
            // all columns permuted by the same τ ⇒ rows are reordered whole,
            // so the predictions are the baseline ones at permuted positions
            let all_permuted: f64 = tau
                .iter()
                .zip(data.target().iter())
                .map(|(&src, &y)| loss.eval(base_preds[src], y))
                .sum();
            let kept = apply_joint_permutation(data.features(), &complement, tau);
            let preds = model.predict(&kept.view());
            all_permuted - loss_sum(loss, &preds, data.target())
        })
        .collect();
    Ok(totals.iter().sum::<f64>() / (data.n() * taus.len()) as f64)
}

fn maybe_normalize(score: f64, group_len: usize, cfg: &PermConfig) -> f64 {
    if cfg.normalize {
        score / group_len as f64
    } else {
        score
    }
}

/// Single-feature permutation importance.
pub fn pfi(
    model: &dyn Model,
    data: &Dataset,
    feature: usize,
    cfg: &PermConfig,
    loss: Loss,
) -> Result<f64> {
    gpfi(model, data, &[feature], cfg, loss)
}

/// Grouped permutation feature importance.
pub fn gpfi(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    cfg: &PermConfig,
    loss: Loss,
) -> Result<f64> {
    let taus = draw_permutations(data.n(), cfg.m, cfg.seed);
    let raw = gpfi_with_taus(model, data, group, &taus, loss)?;
    Ok(maybe_normalize(raw, group.len(), cfg))
}

/// Group-only permutation feature importance.
pub fn gopfi(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    cfg: &PermConfig,
    loss: Loss,
) -> Result<f64> {
    let taus = draw_permutations(data.n(), cfg.m, cfg.seed);
    let raw = gopfi_with_taus(model, data, group, &taus, loss)?;
    Ok(maybe_normalize(raw, group.len(), cfg))
}

fn scores_for_groups(
    model: &dyn Model,
    data: &Dataset,
    groups: &GroupSpec,
    taus: &[Vec<usize>],
    loss: Loss,
    method: PermMethod,
    cfg: &PermConfig,
) -> Result<Vec<f64>> {
    groups
        .iter()
        .map(|(_, idx)| {
            let raw = match method {
                PermMethod::Gpfi => gpfi_with_taus(model, data, idx, taus, loss)?,
                PermMethod::Gopfi => gopfi_with_taus(model, data, idx, taus, loss)?,
            };
            Ok(maybe_normalize(raw, idx.len(), cfg))
        })
        .collect()
}

/// Importance report for a fixed model on the full dataset (no refitting).
/// One permutation set is shared across all groups.
pub fn perm_importance(
    model: &dyn Model,
    data: &Dataset,
    groups: &GroupSpec,
    cfg: &PermConfig,
    loss: Loss,
    method: PermMethod,
) -> Result<ImportanceReport> {
    let taus = draw_permutations(data.n(), cfg.m, cfg.seed);
    let scores = scores_for_groups(model, data, groups, &taus, loss, method, cfg)?;
    let mut report = ImportanceReport::new(method.id(), loss.id(), cfg.seed);
    report.permutations = Some(cfg.m);
    for ((name, _), score) in groups.iter().zip(scores) {
        report.entries.push(GroupScore::from_folds(name, vec![score]));
    }
    Ok(report)
}

/// Resampling-embedded importance: per fold, fit on the train split and run
/// the permutation estimator on the held-out test split.
pub fn perm_importance_resampled(
    learner: &dyn Learner,
    data: &Dataset,
    groups: &GroupSpec,
    plan: &ResamplingPlan,
    cfg: &PermConfig,
    loss: Loss,
    method: PermMethod,
) -> Result<ImportanceReport> {
    let splits = make_splits(plan, data.n())?;
    let fold_scores: Vec<Vec<f64>> = splits
        .par_iter()
        .enumerate()
        .map(|(fold, split)| -> Result<Vec<f64>> {
            if split.train.len() < 2 {
                return Err(Error::contract("fold with < 2 training rows"));
            }
            let train = data.select_rows(&split.train);
            let test = data.select_rows(&split.test);
            let model = learner.fit(&train)?;
            let taus = draw_permutations(
                test.n(),
                cfg.m,
                seed::child_seed(cfg.seed, "perm-fold", fold as u64),
            );
            scores_for_groups(model.as_ref(), &test, groups, &taus, loss, method, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ImportanceReport::new(method.id(), loss.id(), cfg.seed);
    report.permutations = Some(cfg.m);
    for (g, (name, _)) in groups.iter().enumerate() {
        let per_fold: Vec<f64> = fold_scores.iter().map(|fs| fs[g]).collect();
        report.entries.push(GroupScore::from_folds(name, per_fold));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LinearLearner, NullLearner};
    use indexmap::IndexMap;
    use ndarray::{Array1, Array2, ArrayView2};
    use rand_distr::{Distribution, StandardNormal};

    /// Predicts column 0 verbatim.
    struct FirstColumn;
    impl Model for FirstColumn {
        fn predict(&self, f: &ArrayView2<f64>) -> Vec<f64> {
            f.column(0).to_vec()
        }
        fn width(&self) -> Option<usize> {
            None
        }
    }

    fn line_data() -> Dataset {
        // y = x₁ with x₁ = (0, 1, 2); second column is ignored noise
        Dataset::new(
            Array2::from_shape_vec((3, 2), vec![0.0, 9.0, 1.0, 8.0, 2.0, 7.0]).unwrap(),
            vec!["x1".into(), "x2".into()],
            Array1::from(vec![0.0, 1.0, 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn ignored_feature_scores_exactly_zero() {
        let d = line_data();
        let model = FirstColumn;
        let cfg = PermConfig { m: 20, seed: 1, normalize: false };
        assert_eq!(pfi(&model, &d, 1, &cfg, Loss::Mse).unwrap(), 0.0);

        // a model ignoring everything scores 0 under gopfi as well
        let null = NullLearner.fit(&d).unwrap();
        assert_eq!(gopfi(null.as_ref(), &d, &[0, 1], &cfg, Loss::Mse).unwrap(), 0.0);
    }

    #[test]
    fn exhaustive_pfi_matches_hand_oracle() {
        let d = line_data();
        let taus = exhaustive_permutations(3).unwrap();
        assert_eq!(taus.len(), 6);
        // oracle: mean over all 6 permutations of mean squared displacement
        let x: [f64; 3] = [0.0, 1.0, 2.0];
        let mut total = 0.0;
        for tau in &taus {
            for i in 0..3 {
                total += (x[tau[i]] - x[i]).powi(2);
            }
        }
        let oracle = total / (3.0 * 6.0);
        assert!((oracle - 4.0 / 3.0).abs() < 1e-15);

        let got = gpfi_with_taus(&FirstColumn, &d, &[0], &taus, Loss::Mse).unwrap();
        assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    }

    #[test]
    fn singleton_group_equals_pfi_under_same_draws() {
        let d = line_data();
        let cfg = PermConfig { m: 15, seed: 42, normalize: false };
        let a = pfi(&FirstColumn, &d, 0, &cfg, Loss::Mse).unwrap();
        let b = gpfi(&FirstColumn, &d, &[0], &cfg, Loss::Mse).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn joint_permutation_keeps_duplicated_columns_equal() {
        let x = Array2::from_shape_vec(
            (4, 3),
            vec![1.0, 1.0, 5.0, 2.0, 2.0, 6.0, 3.0, 3.0, 7.0, 4.0, 4.0, 8.0],
        )
        .unwrap();
        let tau = vec![2, 0, 3, 1];
        let out = apply_joint_permutation(&x, &[0, 1], &tau);
        for i in 0..4 {
            assert_eq!(out[[i, 0]], out[[i, 1]]);
            assert_eq!(out[[i, 0]], x[[tau[i], 0]]);
            assert_eq!(out[[i, 2]], x[[i, 2]]); // untouched column
        }
    }

    #[test]
    fn gopfi_full_set_reconstructs_all_permuted_loss() {
        let d = line_data();
        let taus = draw_permutations(d.n(), 24, 5);
        let model = FirstColumn;
        let full: Vec<usize> = vec![0, 1];
        let base_preds = model.predict(&d.features().view());
        let base_mean = crate::loss::mean_loss(Loss::Mse, &base_preds, d.target().as_slice().unwrap());

        let gopfi_full = gopfi_with_taus(&model, &d, &full, &taus, Loss::Mse).unwrap();
        // independent route: average loss of fully row-permuted data
        let mut all_perm = 0.0;
        for tau in &taus {
            let permuted = apply_joint_permutation(d.features(), &full, tau);
            let preds = model.predict(&permuted.view());
            all_perm += crate::loss::mean_loss(Loss::Mse, &preds, d.target().as_slice().unwrap());
        }
        all_perm /= taus.len() as f64;
        assert!((gopfi_full + base_mean - all_perm).abs() < 1e-12);
    }

    #[test]
    fn normalize_divides_by_group_size() {
        let d = line_data();
        let raw = PermConfig { m: 10, seed: 3, normalize: false };
        let norm = PermConfig { m: 10, seed: 3, normalize: true };
        let a = gpfi(&FirstColumn, &d, &[0, 1], &raw, Loss::Mse).unwrap();
        let b = gpfi(&FirstColumn, &d, &[0, 1], &norm, Loss::Mse).unwrap();
        assert!((a / 2.0 - b).abs() < 1e-15);
        // singleton unchanged
        let c = gpfi(&FirstColumn, &d, &[0], &raw, Loss::Mse).unwrap();
        let e = gpfi(&FirstColumn, &d, &[0], &norm, Loss::Mse).unwrap();
        assert_eq!(c, e);
    }

    #[test]
    fn informative_features_get_positive_pfi() {
        // y = 3x₁ + ε; PFI of x₁ positive in ≥ 95% of 20 seeds
        let mut positives = 0;
        for s in 0..20u64 {
            let mut rng = seed::rng(s, "pfi-sign", 0);
            let n = 200;
            let mut xs = Vec::with_capacity(2 * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let x1: f64 = StandardNormal.sample(&mut rng);
                let x2: f64 = StandardNormal.sample(&mut rng);
                xs.extend_from_slice(&[x1, x2]);
                let e: f64 = StandardNormal.sample(&mut rng);
                y.push(3.0 * x1 + e);
            }
            let d = Dataset::new(
                Array2::from_shape_vec((n, 2), xs).unwrap(),
                vec!["x1".into(), "x2".into()],
                Array1::from(y),
            )
            .unwrap();
            let model = LinearLearner::ols().fit(&d).unwrap();
            let cfg = PermConfig { m: 10, seed: s, normalize: false };
            if pfi(model.as_ref(), &d, 0, &cfg, Loss::Mse).unwrap() > 0.0 {
                positives += 1;
            }
        }
        assert!(positives >= 19, "positive in {positives}/20 seeds");
    }

    #[test]
    fn single_shot_report_equals_direct_estimator() {
        let d = line_data();
        let mut map = IndexMap::new();
        map.insert("G1".to_string(), vec![0]);
        map.insert("G2".to_string(), vec![1]);
        let groups = GroupSpec::new(map, 2).unwrap();
        let cfg = PermConfig { m: 12, seed: 9, normalize: false };
        let report =
            perm_importance(&FirstColumn, &d, &groups, &cfg, Loss::Mse, PermMethod::Gpfi).unwrap();
        let direct = gpfi(&FirstColumn, &d, &[0], &cfg, Loss::Mse).unwrap();
        assert_eq!(report.get("G1").unwrap().mean, direct);
        assert_eq!(report.entries.len(), 2);
    }

    #[test]
    fn resampled_report_is_seed_deterministic() {
        let mut rng = seed::rng(8, "resampled-perm", 0);
        let n = 60;
        let mut xs = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            let x2: f64 = StandardNormal.sample(&mut rng);
            xs.extend_from_slice(&[x1, x2]);
            y.push(2.0 * x1 - x2);
        }
        let d = Dataset::new(
            Array2::from_shape_vec((n, 2), xs).unwrap(),
            vec!["x1".into(), "x2".into()],
            Array1::from(y),
        )
        .unwrap();
        let mut map = IndexMap::new();
        map.insert("A".to_string(), vec![0]);
        map.insert("B".to_string(), vec![1]);
        let groups = GroupSpec::new(map, 2).unwrap();
        let plan = ResamplingPlan::KFold { k: 3, seed: 4 };
        let cfg = PermConfig { m: 8, seed: 21, normalize: false };
        let r1 = perm_importance_resampled(
            &LinearLearner::ols(), &d, &groups, &plan, &cfg, Loss::Mse, PermMethod::Gpfi,
        )
        .unwrap();
        let r2 = perm_importance_resampled(
            &LinearLearner::ols(), &d, &groups, &plan, &cfg, Loss::Mse, PermMethod::Gpfi,
        )
        .unwrap();
        for (a, b) in r1.entries.iter().zip(&r2.entries) {
            assert_eq!(a.per_fold, b.per_fold);
        }
        assert_eq!(r1.entries[0].per_fold.len(), 3);
    }
}
