//! Grouped Shapley importance (GSI).
//!
//! φ(G) = Σ_{S ⊆ 𝒢∖G} (|𝒢|−1−|S|)!·|S|!/|𝒢|! · [v(S∪G) − v(S)], the weighted
//! average of a group's marginal contributions over coalitions of groups.
//! Exact enumeration covers up to [`EXACT_CAP`] groups (2^|𝒢| coalition
//! evaluations); the sampled mode averages marginals over uniform random
//! orderings of 𝒢, an unbiased estimator of the same target with a clean
//! per-group standard error. Per-feature scores use the identical engine over
//! singleton groups, enabling the interaction remainder
//! R = φ(G) − Σ_{i∈G} φ(x_i).

mod value;

pub use value::{
    CoalitionValue, PermValueFn, RefitValueFn, SyntheticValueFn, TableValueFn, ValueFunction,
};

use crate::data::GroupSpec;
use crate::error::{Error, Result};
use crate::linalg::mean_sd;
use indexmap::IndexMap;
use itertools::Itertools;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Exact enumeration bound: 2^12 = 4096 coalition evaluations.
pub const EXACT_CAP: usize = 12;

/// Exhaustive-orderings bound (|𝒢|! orderings).
pub const ORDERINGS_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    Exact,
    AllOrderings,
    Sampled { m: usize, seed: u64 },
}

impl ShapMode {
    fn label(&self) -> &'static str {
        match self {
            ShapMode::Exact => "exact",
            ShapMode::AllOrderings => "all-orderings",
            ShapMode::Sampled { .. } => "sampled",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupPhi {
    pub phi: f64,
    /// Sampling standard error; 0 in exact mode.
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remainder: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ShapleyReport {
    pub mode: ShapMode,
    pub groups: IndexMap<String, GroupPhi>,
    /// Per-feature Shapley scores over the union of all groups, when computed.
    pub features: Option<IndexMap<String, f64>>,
    /// v(𝒢), the payout of the full coalition.
    pub total_value: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    total_value: f64,
    groups: &'a IndexMap<String, GroupPhi>,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: &'a Option<IndexMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest_hash: Option<&'a str>,
}

impl ShapleyReport {
    pub fn phi(&self, group: &str) -> Option<f64> {
        self.groups.get(group).map(|g| g.phi)
    }

    pub fn to_json_value(&self, manifest_hash: Option<&str>) -> Result<serde_json::Value> {
        let m = match self.mode {
            ShapMode::Sampled { m, .. } => Some(m),
            _ => None,
        };
        Ok(serde_json::to_value(ReportJson {
            mode: self.mode.label(),
            m,
            total_value: self.total_value,
            groups: &self.groups,
            features: &self.features,
            manifest_hash,
        })?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>, manifest_hash: Option<&str>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &self.to_json_value(manifest_hash)?)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// Sorted, deduplicated feature union of the sets selected by `mask`.
fn union_for_mask(sets: &[Vec<usize>], mask: u32) -> Vec<usize> {
    let mut union: Vec<usize> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if mask & (1 << i) != 0 {
            union.extend_from_slice(set);
        }
    }
    union.sort_unstable();
    union.dedup();
    union
}

/// Shapley weights w[s] = (l−1−s)!·s!/l! for coalition sizes s = 0..l−1.
fn shapley_weights(l: usize) -> Vec<f64> {
    let fact: Vec<f64> = {
        let mut f = vec![1.0f64; l + 1];
        for i in 1..=l {
            f[i] = f[i - 1] * i as f64;
        }
        f
    };
    (0..l).map(|s| fact[l - 1 - s] * fact[s] / fact[l]).collect()
}

/// Marginal contribution Δ_G(S) = v(S∪{G}) − v(S) for named groups.
pub fn marginal_contribution(
    v: &ValueFunction,
    groups: &GroupSpec,
    group: &str,
    coalition: &[&str],
) -> Result<f64> {
    if coalition.contains(&group) {
        return Err(Error::contract(format!(
            "group '{group}' is already part of the coalition"
        )));
    }
    let without = v.evaluate(&groups.union_of(coalition)?)?;
    let mut with_names: Vec<&str> = coalition.to_vec();
    with_names.push(group);
    let with = v.evaluate(&groups.union_of(&with_names)?)?;
    Ok(with - without)
}

/// Exact φ for each of `sets`; 2^l coalition evaluations.
fn exact_phi(v: &ValueFunction, sets: &[Vec<usize>]) -> Result<Vec<f64>> {
    let l = sets.len();
    let weights = shapley_weights(l);
    let n_masks: u32 = 1 << l;
    // evaluate all coalition payouts up front (parallel; memoized by union)
    let payouts: Vec<f64> = (0..n_masks)
        .into_par_iter()
        .map(|mask| v.evaluate(&union_for_mask(sets, mask)))
        .collect::<Result<Vec<f64>>>()?;
    let mut phi = vec![0.0; l];
    for (g, phi_g) in phi.iter_mut().enumerate() {
        let bit = 1u32 << g;
        for mask in 0..n_masks {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            *phi_g += weights[s] * (payouts[(mask | bit) as usize] - payouts[mask as usize]);
        }
    }
    Ok(phi)
}

/// φ estimates plus standard errors from an explicit list of orderings.
fn phi_from_orderings(
    v: &ValueFunction,
    sets: &[Vec<usize>],
    orderings: &[Vec<usize>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = sets.len();
    let marginals: Vec<Vec<f64>> = orderings
        .par_iter()
        .map(|ordering| -> Result<Vec<f64>> {
            let mut per_group = vec![0.0; l];
            let mut mask: u32 = 0;
            let mut prev = 0.0;
            for &g in ordering {
                mask |= 1 << g;
                let value = v.evaluate(&union_for_mask(sets, mask))?;
                per_group[g] = value - prev;
                prev = value;
            }
            Ok(per_group)
        })
        .collect::<Result<Vec<_>>>()?;

    let m = orderings.len() as f64;
    let mut phi = vec![0.0; l];
    let mut stderr = vec![0.0; l];
    for g in 0..l {
        let series: Vec<f64> = marginals.iter().map(|row| row[g]).collect();
        let (mean, sd) = mean_sd(&series);
        phi[g] = mean;
        stderr[g] = sd / m.sqrt();
    }
    Ok((phi, stderr))
}

fn build_report(
    v: &ValueFunction,
    sets: &[Vec<usize>],
    names: &[String],
    phi: Vec<f64>,
    stderr: Vec<f64>,
    mode: ShapMode,
) -> Result<ShapleyReport> {
    let all_mask = (1u32 << sets.len()) - 1;
    let total_value = v.evaluate(&union_for_mask(sets, all_mask))?;
    let mut groups = IndexMap::new();
    for (i, name) in names.iter().enumerate() {
        groups.insert(
            name.clone(),
            GroupPhi { phi: phi[i], stderr: stderr[i], remainder: None },
        );
    }
    Ok(ShapleyReport { mode, groups, features: None, total_value })
}

fn spec_sets(groups: &GroupSpec) -> (Vec<Vec<usize>>, Vec<String>) {
    let sets: Vec<Vec<usize>> = groups.iter().map(|(_, idx)| idx.to_vec()).collect();
    let names: Vec<String> = groups.iter().map(|(n, _)| n.to_string()).collect();
    (sets, names)
}

/// Exact grouped Shapley importance. Capped at [`EXACT_CAP`] groups.
pub fn gsi_exact(v: &ValueFunction, groups: &GroupSpec) -> Result<ShapleyReport> {
    let (sets, names) = spec_sets(groups);
    if sets.len() > EXACT_CAP {
        return Err(Error::contract(format!(
            "{} groups exceed the exact cap of {EXACT_CAP} (2^l evaluations); use gsi_sampled",
            sets.len()
        )));
    }
    let phi = exact_phi(v, &sets)?;
    let stderr = vec![0.0; sets.len()];
    build_report(v, &sets, &names, phi, stderr, ShapMode::Exact)
}

/// GSI averaged over every |𝒢|! ordering — deterministic, equals
/// [`gsi_exact`] up to floating-point summation order.
pub fn gsi_all_orderings(v: &ValueFunction, groups: &GroupSpec) -> Result<ShapleyReport> {
    let (sets, names) = spec_sets(groups);
    if sets.len() > ORDERINGS_CAP {
        return Err(Error::contract(format!(
            "{} groups exceed the orderings cap of {ORDERINGS_CAP}",
            sets.len()
        )));
    }
    let orderings: Vec<Vec<usize>> = (0..sets.len()).permutations(sets.len()).collect();
    let (phi, stderr) = phi_from_orderings(v, &sets, &orderings)?;
    build_report(v, &sets, &names, phi, stderr, ShapMode::AllOrderings)
}

/// Sampled GSI: averages marginal contributions over `m` uniform random
/// orderings of the groups. Unbiased for the exact value; reports a
/// per-group standard error.
pub fn gsi_sampled(
    v: &ValueFunction,
    groups: &GroupSpec,
    m: usize,
    seed: u64,
) -> Result<ShapleyReport> {
    if m == 0 {
        return Err(Error::contract("need m ≥ 1 sampled orderings"));
    }
    let (sets, names) = spec_sets(groups);
    let orderings: Vec<Vec<usize>> = (0..m)
        .map(|k| {
            let mut ordering: Vec<usize> = (0..sets.len()).collect();
            ordering.shuffle(&mut crate::seed::rng(seed, "shapley-ordering", k as u64));
            ordering
        })
        .collect();
    let (phi, stderr) = phi_from_orderings(v, &sets, &orderings)?;
    build_report(v, &sets, &names, phi, stderr, ShapMode::Sampled { m, seed })
}

/// Per-feature Shapley importance: the group engine run on singleton groups.
pub fn feature_shapley(
    v: &ValueFunction,
    features: &[usize],
    names: &[String],
    mode: ShapMode,
) -> Result<IndexMap<String, f64>> {
    if features.len() != names.len() {
        return Err(Error::contract("feature/name length mismatch"));
    }
    let sets: Vec<Vec<usize>> = features.iter().map(|&i| vec![i]).collect();
    let phi = match mode {
        ShapMode::Exact => {
            if sets.len() > EXACT_CAP {
                return Err(Error::contract(format!(
                    "{} features exceed the exact cap of {EXACT_CAP}; use sampled mode",
                    sets.len()
                )));
            }
            exact_phi(v, &sets)?
        }
        ShapMode::AllOrderings => {
            if sets.len() > ORDERINGS_CAP {
                return Err(Error::contract("too many features for all-orderings mode"));
            }
            let orderings: Vec<Vec<usize>> =
                (0..sets.len()).permutations(sets.len()).collect();
            phi_from_orderings(v, &sets, &orderings)?.0
        }
        ShapMode::Sampled { m, seed } => {
            let orderings: Vec<Vec<usize>> = (0..m)
                .map(|k| {
                    let mut ordering: Vec<usize> = (0..sets.len()).collect();
                    ordering
                        .shuffle(&mut crate::seed::rng(seed, "shapley-feature-ordering", k as u64));
                    ordering
                })
                .collect();
            phi_from_orderings(v, &sets, &orderings)?.0
        }
    };
    Ok(names.iter().cloned().zip(phi).collect())
}

/// Fills `report.features` with per-feature φ over the union of all groups
/// (using the same value function, hence the same seed policy and cache) and
/// stores R = φ(G) − Σ_{i∈G} φ(x_i) per group.
pub fn decompose_features(
    report: &mut ShapleyReport,
    v: &ValueFunction,
    groups: &GroupSpec,
    feature_names: &[String],
    mode: ShapMode,
) -> Result<()> {
    let union = groups.union_all();
    let names: Vec<String> = union.iter().map(|&i| feature_names[i].clone()).collect();
    let scores = feature_shapley(v, &union, &names, mode)?;

    for (name, idx) in groups.iter() {
        let sum: f64 = idx.iter().map(|&i| scores[&feature_names[i]]).sum();
        if let Some(entry) = report.groups.get_mut(name) {
            entry.remainder = Some(entry.phi - sum);
        }
    }
    report.features = Some(scores);
    Ok(())
}

/// Interaction remainder of one group; requires feature-level scores.
pub fn remainder(report: &ShapleyReport, group: &str) -> Result<f64> {
    if report.features.is_none() {
        return Err(Error::contract(
            "feature-level scores missing; run decompose_features first",
        ));
    }
    report
        .groups
        .get(group)
        .and_then(|g| g.remainder)
        .ok_or_else(|| Error::contract(format!("unknown group '{group}'")))
}
