//! Refitting-based grouped importance.
//!
//! LOGO removes a group and refits: score = ĜE(without group) − ĜE(full).
//! LOGI trains on a group alone against the mean-predicting null model:
//! score = ĜE(null) − ĜE(group only). Every group in a report sees identical
//! train/test splits, so comparisons are paired; negative scores are reported
//! as-is.

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::linalg::mean_sd;
use crate::loss::Loss;
use crate::model::Learner;
use crate::learners::NullLearner;
use crate::report::{GroupScore, ImportanceReport};
use crate::resampling::{ge_over_splits, make_splits, ResamplingPlan, Split};
use rayon::prelude::*;

pub struct RefitConfig<'a> {
    pub plan: ResamplingPlan,
    pub learner: &'a dyn Learner,
    pub loss: Loss,
}

/// Per-fold refit scores plus the two generalization-error series they came
/// from. `per_fold[i] = ge_baseline[i] − ge_model[i]` for LOGI and
/// `ge_model[i] − ge_baseline[i]` for LOGO (baseline = full model there).
#[derive(Debug, Clone)]
pub struct RefitScore {
    pub mean: f64,
    pub sd: f64,
    pub per_fold: Vec<f64>,
    /// Full-model GE (LOGO) or null-model GE (LOGI), per fold.
    pub ge_baseline: Vec<f64>,
    /// Reduced-model GE (LOGO) or group-only-model GE (LOGI), per fold.
    pub ge_model: Vec<f64>,
}

impl RefitScore {
    fn from_parts(ge_baseline: Vec<f64>, ge_model: Vec<f64>, sign: f64) -> Self {
        let per_fold: Vec<f64> = ge_model
            .iter()
            .zip(&ge_baseline)
            .map(|(m, b)| sign * (m - b))
            .collect();
        let (mean, sd) = mean_sd(&per_fold);
        RefitScore { mean, sd, per_fold, ge_baseline, ge_model }
    }
}

/// Leave-one-group-out: refit without the group's columns on the same splits
/// as the full model. Requires at least one feature to remain.
pub fn logo(cfg: &RefitConfig, data: &Dataset, group: &[usize]) -> Result<RefitScore> {
    let splits = make_splits(&cfg.plan, data.n())?;
    logo_with_splits(cfg, data, group, &splits)
}

pub(crate) fn logo_with_splits(
    cfg: &RefitConfig,
    data: &Dataset,
    group: &[usize],
    splits: &[Split],
) -> Result<RefitScore> {
    if group.is_empty() {
        return Err(Error::contract("group must be non-empty"));
    }
    let remaining = (0..data.p()).filter(|c| !group.contains(c)).count();
    if remaining == 0 {
        return Err(Error::contract(
            "LOGO would remove every feature; use LOGI for whole-model importance",
        ));
    }
    let full = ge_over_splits(cfg.learner, data, splits, cfg.loss)?;
    let reduced_data = data.drop_features(group)?;
    let reduced = ge_over_splits(cfg.learner, &reduced_data, splits, cfg.loss)?;
    Ok(RefitScore::from_parts(full.per_fold, reduced.per_fold, 1.0))
}

/// Leave-one-group-in: model on the group's columns only, against the null
/// model evaluated on the same splits.
pub fn logi(cfg: &RefitConfig, data: &Dataset, group: &[usize]) -> Result<RefitScore> {
    let splits = make_splits(&cfg.plan, data.n())?;
    logi_with_splits(cfg, data, group, &splits)
}

pub(crate) fn logi_with_splits(
    cfg: &RefitConfig,
    data: &Dataset,
    group: &[usize],
    splits: &[Split],
) -> Result<RefitScore> {
    if group.is_empty() {
        return Err(Error::contract("group must be non-empty"));
    }
    let null = ge_over_splits(&NullLearner, data, splits, cfg.loss)?;
    let group_data = data.select_features(group)?;
    let fitted = ge_over_splits(cfg.learner, &group_data, splits, cfg.loss)?;
    Ok(RefitScore::from_parts(null.per_fold, fitted.per_fold, -1.0))
}

/// LOGI of the union of several groups' features.
pub fn logi_union(cfg: &RefitConfig, data: &Dataset, groups: &[&[usize]]) -> Result<RefitScore> {
    let mut union: Vec<usize> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        return Err(Error::contract("union of groups is empty"));
    }
    logi(cfg, data, &union)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitMethod {
    Logo,
    Logi,
}

impl RefitMethod {
    pub fn id(self) -> &'static str {
        match self {
            RefitMethod::Logo => "logo",
            RefitMethod::Logi => "logi",
        }
    }
}

/// Report over all groups with one shared set of splits.
pub fn refit_importance(
    cfg: &RefitConfig,
    data: &Dataset,
    groups: &GroupSpec,
    method: RefitMethod,
) -> Result<ImportanceReport> {
    let splits = make_splits(&cfg.plan, data.n())?;
    let names: Vec<&str> = groups.names();
    let scores: Vec<RefitScore> = names
        .par_iter()
        .map(|name| {
            let idx = groups.get(name).unwrap();
            match method {
                RefitMethod::Logo => logo_with_splits(cfg, data, idx, &splits),
                RefitMethod::Logi => logi_with_splits(cfg, data, idx, &splits),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ImportanceReport::new(method.id(), cfg.loss.id(), cfg.plan.seed());
    for (name, score) in names.iter().zip(scores) {
        report.entries.push(GroupScore::from_folds(*name, score.per_fold));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LinearLearner;
    use crate::seed;
    use ndarray::{Array1, Array2};
    use rand_distr::{Distribution, StandardNormal};

    fn duplicated_signal_data(n: usize, s: u64) -> Dataset {
        // y = 2x₁ + ε with x₂ an exact copy of x₁ and x₃ pure noise
        let mut rng = seed::rng(s, "refit-data", 0);
        let mut xs = Vec::with_capacity(3 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            let x3: f64 = StandardNormal.sample(&mut rng);
            xs.extend_from_slice(&[x1, x1, x3]);
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(2.0 * x1 + 0.3 * e);
        }
        Dataset::new(
            Array2::from_shape_vec((n, 3), xs).unwrap(),
            vec!["x1".into(), "x2".into(), "x3".into()],
            Array1::from(y),
        )
        .unwrap()
    }

    #[test]
    fn logo_of_duplicated_feature_is_near_zero() {
        let mut worst: f64 = 0.0;
        for s in 0..10u64 {
            let d = duplicated_signal_data(400, s);
            let learner = LinearLearner::new(1e-6);
            let cfg = RefitConfig {
                plan: ResamplingPlan::KFold { k: 5, seed: s },
                learner: &learner,
                loss: Loss::Mse,
            };
            let score = logo(&cfg, &d, &[0]).unwrap();
            worst = worst.max(score.mean.abs());
        }
        assert!(worst < 0.1, "max |LOGO| over seeds = {worst}");
    }

    #[test]
    fn logo_identity_holds_per_fold() {
        // LOGO + full ĜE = reduced ĜE, exactly, fold by fold
        let d = duplicated_signal_data(200, 3);
        let learner = LinearLearner::new(0.01);
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 4, seed: 1 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let score = logo(&cfg, &d, &[2]).unwrap();
        for i in 0..score.per_fold.len() {
            let lhs = score.per_fold[i] + score.ge_baseline[i];
            assert!((lhs - score.ge_model[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn logo_rejects_removing_all_features() {
        let d = duplicated_signal_data(50, 0);
        let learner = LinearLearner::new(0.01);
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 2, seed: 0 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let err = logo(&cfg, &d, &[0, 1, 2]).unwrap_err().to_string();
        assert!(err.contains("LOGI"), "{err}");
    }

    #[test]
    fn logi_matches_variance_decomposition() {
        // y = 2x₁ + ε, ε ~ N(0,1) ⇒ LOGI({x₁}) ≈ Var(y) − 1 = 4
        let mut rng = seed::rng(7, "logi-var", 0);
        let n = 2000;
        let mut xs = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            xs.push(x1);
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(2.0 * x1 + e);
        }
        let d = Dataset::new(
            Array2::from_shape_vec((n, 1), xs).unwrap(),
            vec!["x1".into()],
            Array1::from(y),
        )
        .unwrap();
        let learner = LinearLearner::ols();
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 5, seed: 2 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let score = logi(&cfg, &d, &[0]).unwrap();
        assert!((score.mean - 4.0).abs() < 0.4, "LOGI = {}", score.mean);
        // bounded above by the null model's GE on the same splits
        let null_mean = score.ge_baseline.iter().sum::<f64>() / score.ge_baseline.len() as f64;
        assert!(score.mean <= null_mean + 1e-12);
    }

    #[test]
    fn logi_of_uninformative_group_is_small() {
        let d = duplicated_signal_data(500, 5);
        let learner = LinearLearner::new(0.1);
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 5, seed: 3 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let score = logi(&cfg, &d, &[2]).unwrap(); // x₃ is noise
        assert!(score.mean < 0.1, "LOGI of noise group = {}", score.mean);
    }

    #[test]
    fn logi_union_behaviors() {
        // additive independent signals: LOGI(A ∪ B) ≈ LOGI(A) + LOGI(B)
        let mut rng = seed::rng(11, "logi-union", 0);
        let n = 2000;
        let mut xs = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            xs.extend_from_slice(&[a, b]);
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(2.0 * a + 2.0 * b + e);
        }
        let d = Dataset::new(
            Array2::from_shape_vec((n, 2), xs).unwrap(),
            vec!["a".into(), "b".into()],
            Array1::from(y),
        )
        .unwrap();
        let learner = LinearLearner::ols();
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 5, seed: 4 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let la = logi(&cfg, &d, &[0]).unwrap().mean;
        let lb = logi(&cfg, &d, &[1]).unwrap().mean;
        let lab = logi_union(&cfg, &d, &[&[0], &[1]]).unwrap().mean;
        assert!(((la + lb) - lab).abs() < 0.1 * lab.abs(), "{la} + {lb} vs {lab}");

        // union of one group equals that group's LOGI
        let single = logi_union(&cfg, &d, &[&[0]]).unwrap().mean;
        assert_eq!(single, la);
        // overlapping identical groups collapse to one column set
        let overlap = logi_union(&cfg, &d, &[&[0], &[0]]).unwrap().mean;
        assert_eq!(overlap, la);
    }

    #[test]
    fn report_shares_splits_across_groups() {
        let d = duplicated_signal_data(120, 9);
        let learner = LinearLearner::new(0.01);
        let cfg = RefitConfig {
            plan: ResamplingPlan::KFold { k: 3, seed: 8 },
            learner: &learner,
            loss: Loss::Mse,
        };
        let mut map = indexmap::IndexMap::new();
        map.insert("signal".to_string(), vec![0, 1]);
        map.insert("noise".to_string(), vec![2]);
        let groups = GroupSpec::new(map, 3).unwrap();
        let report = refit_importance(&cfg, &d, &groups, RefitMethod::Logi).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert_eq!(report.entries[0].per_fold.len(), 3);

        // identical splits: the null-model GE series inside both LOGI runs
        // must agree fold-for-fold
        let splits = make_splits(&cfg.plan, d.n()).unwrap();
        let a = logi_with_splits(&cfg, &d, &[0, 1], &splits).unwrap();
        let b = logi_with_splits(&cfg, &d, &[2], &splits).unwrap();
        assert_eq!(a.ge_baseline, b.ge_baseline);
    }
}
