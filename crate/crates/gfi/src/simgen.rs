//! Seeded synthetic-data generators for the five benchmark designs used by
//! the test-suites and the `simulate` CLI command. Every generator is a pure
//! function of `(n, seed, knobs)`.

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::seed;
use indexmap::IndexMap;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Three 10-feature groups; the second copies the first, the third is
    /// independent; Y = 2U + V + ε.
    DependentGroups,
    /// Four 10-feature groups with tunable within-group correlation; the
    /// fourth group never enters the target.
    WithinCorr,
    /// Six-feature versus two-feature group on uniform features;
    /// Y = 2x₁ + 2x₃ + 2x₇ + ε.
    GroupSize,
    /// 50 features in decreasing-correlation blocks and one sparse linear
    /// factor Z driving Y.
    OneFactor,
    /// Two uncorrelated 20-feature sets with a linear factor Z₁ and a
    /// quadratic factor Z₂.
    TwoFactor,
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::DependentGroups => "dependent-groups",
            Scenario::WithinCorr => "within-corr",
            Scenario::GroupSize => "group-size",
            Scenario::OneFactor => "one-factor",
            Scenario::TwoFactor => "two-factor",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dependent-groups" => Ok(Scenario::DependentGroups),
            "within-corr" => Ok(Scenario::WithinCorr),
            "group-size" => Ok(Scenario::GroupSize),
            "one-factor" => Ok(Scenario::OneFactor),
            "two-factor" => Ok(Scenario::TwoFactor),
            other => Err(Error::config(format!(
                "unknown scenario '{other}' (expected dependent-groups, within-corr, \
                 group-size, one-factor, or two-factor)"
            ))),
        }
    }
}

/// Ground-truth sidecar for the factor scenarios.
#[derive(Debug, Clone, Serialize)]
pub struct Truth {
    /// Factor values per observation.
    pub factors: IndexMap<String, Vec<f64>>,
    /// True loading weights, keyed by factor then feature name.
    pub loadings: IndexMap<String, IndexMap<String, f64>>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: Dataset,
    pub groups: Option<GroupSpec>,
    pub truth: Option<Truth>,
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn altered_rows(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<usize> {
    let count = ((n as f64) * fraction).round() as usize;
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    rows.truncate(count.min(n));
    rows
}

/// Additive-noise perturbation: copy the prototype and add N(0, sd) noise on
/// a fresh uniform `fraction` of rows.
fn noisy_copy(rng: &mut ChaCha8Rng, proto: &[f64], fraction: f64, sd: f64) -> Vec<f64> {
    let mut out = proto.to_vec();
    for i in altered_rows(rng, proto.len(), fraction) {
        let e: f64 = StandardNormal.sample(rng);
        out[i] += sd * e;
    }
    out
}

/// Weighted-average perturbation: altered rows become 0.2·U + 0.8·W with W
/// an independent standard normal; unaltered rows equal the prototype.
fn mixed_copy(rng: &mut ChaCha8Rng, proto: &[f64], fraction: f64) -> Vec<f64> {
    let mut out = proto.to_vec();
    for i in altered_rows(rng, proto.len(), fraction) {
        let w: f64 = StandardNormal.sample(rng);
        out[i] = 0.2 * proto[i] + 0.8 * w;
    }
    out
}

fn to_dataset(columns: Vec<Vec<f64>>, names: Vec<String>, y: Vec<f64>) -> Result<Dataset> {
    let n = y.len();
    let p = columns.len();
    let mut flat = Vec::with_capacity(n * p);
    for i in 0..n {
        for col in &columns {
            flat.push(col[i]);
        }
    }
    Dataset::new(
        Array2::from_shape_vec((n, p), flat)
            .map_err(|e| Error::data(format!("shape: {e}")))?,
        names,
        Array1::from(y),
    )
}

/// Dependent-groups design: G₂ copies G₁ (plus tiny noise), G₃ is
/// independent; Y = 2U + V + ε with ε ~ N(0, 0.1).
pub fn gen_dependent_groups(n: usize, seed_value: u64) -> Result<(Dataset, GroupSpec)> {
    if n < 10 {
        return Err(Error::contract("need n ≥ 10"));
    }
    let mut rng = seed::rng(seed_value, "simgen-dependent", 0);
    let u = normals(&mut rng, n);
    let v = normals(&mut rng, n);

    let mut columns = Vec::with_capacity(30);
    let mut names = Vec::with_capacity(30);
    // G1 from U with 10% additive alteration
    for f in 0..10 {
        columns.push(noisy_copy(&mut rng, &u, 0.1, 0.5));
        names.push(format!("g1_f{}", f + 1));
    }
    // G2 copies G1 plus N(0, 0.01) everywhere
    for f in 0..10 {
        let copied: Vec<f64> = columns[f]
            .iter()
            .map(|&x| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x + 0.01 * e
            })
            .collect();
        columns.push(copied);
        names.push(format!("g2_f{}", f + 1));
    }
    // G3 from the independent prototype V
    for f in 0..10 {
        columns.push(noisy_copy(&mut rng, &v, 0.1, 0.5));
        names.push(format!("g3_f{}", f + 1));
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            2.0 * u[i] + v[i] + 0.1 * e
        })
        .collect();

    let dataset = to_dataset(columns, names, y)?;
    let mut map = IndexMap::new();
    map.insert("G1".to_string(), (0..10).collect());
    map.insert("G2".to_string(), (10..20).collect());
    map.insert("G3".to_string(), (20..30).collect());
    Ok((dataset, GroupSpec::new(map, 30)?))
}

/// Within-group-correlation design: four 10-feature groups, each from its own
/// prototype with per-group alter fractions; Z_j built from group features
/// with a quadratic term and a sample-mean indicator; G₄ never enters Y.
pub fn gen_within_corr(
    n: usize,
    seed_value: u64,
    alter: [f64; 4],
) -> Result<(Dataset, GroupSpec)> {
    if n < 10 {
        return Err(Error::contract("need n ≥ 10"));
    }
    for a in alter {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::contract("alter fractions must lie in [0, 1]"));
        }
    }
    let mut rng = seed::rng(seed_value, "simgen-withincorr", 0);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(40);
    let mut names = Vec::with_capacity(40);
    for g in 0..4 {
        let proto = normals(&mut rng, n);
        for f in 0..10 {
            columns.push(mixed_copy(&mut rng, &proto, alter[g]));
            names.push(format!("g{}_f{}", g + 1, f + 1));
        }
    }
    // Z_j = 3·x₃² − 4·x₅ − 6·x₇ + 5·x₉·d_j over groups 1..3, with
    // d_j = 1{mean(x₈) > 0}; feature positions are 1-based within the group
    let mut y = vec![0.0; n];
    for g in 0..3 {
        let base = g * 10;
        let x3 = &columns[base + 2];
        let x5 = &columns[base + 4];
        let x7 = &columns[base + 6];
        let x8 = &columns[base + 7];
        let x9 = &columns[base + 8];
        let d = if x8.iter().sum::<f64>() / n as f64 > 0.0 { 1.0 } else { 0.0 };
        for i in 0..n {
            y[i] += 3.0 * x3[i] * x3[i] - 4.0 * x5[i] - 6.0 * x7[i] + 5.0 * x9[i] * d;
        }
    }
    for item in y.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *item += e;
    }

    let dataset = to_dataset(columns, names, y)?;
    let mut map = IndexMap::new();
    for g in 0..4 {
        map.insert(format!("G{}", g + 1), (g * 10..(g + 1) * 10).collect());
    }
    Ok((dataset, GroupSpec::new(map, 40)?))
}

/// Group-size design: eight i.i.d. U[0,1] features, G₁ = {x₁..x₆},
/// G₂ = {x₇, x₈}, Y = 2x₁ + 2x₃ + 2x₇ + ε.
pub fn gen_group_size(n: usize, seed_value: u64) -> Result<(Dataset, GroupSpec)> {
    if n < 10 {
        return Err(Error::contract("need n ≥ 10"));
    }
    let mut rng = seed::rng(seed_value, "simgen-groupsize", 0);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(8);
    let mut names = Vec::with_capacity(8);
    for f in 0..8 {
        use rand::Rng;
        columns.push((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        names.push(format!("x{}", f + 1));
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            2.0 * columns[0][i] + 2.0 * columns[2][i] + 2.0 * columns[6][i] + e
        })
        .collect();
    let dataset = to_dataset(columns, names, y)?;
    let mut map = IndexMap::new();
    map.insert("G1".to_string(), (0..6).collect());
    map.insert("G2".to_string(), vec![6, 7]);
    Ok((dataset, GroupSpec::new(map, 8)?))
}

#[derive(Debug, Clone)]
pub struct OneFactorData {
    pub dataset: Dataset,
    /// Z = x₅ − 2x₈ − 4x₂₅ + 8x₄₇ + 4x₄₉ per observation.
    pub z: Vec<f64>,
    /// True sparse loading vector as (0-based feature index, weight).
    pub loadings: Vec<(usize, f64)>,
}

/// One-factor design: 50 features in five blocks of decreasing correlation
/// (alter fractions 20%..100%), Z a sparse linear combination, Y = Z + ε.
pub fn gen_one_factor(n: usize, seed_value: u64) -> Result<OneFactorData> {
    if n < 50 {
        return Err(Error::contract("need n ≥ 50"));
    }
    let mut rng = seed::rng(seed_value, "simgen-onefactor", 0);
    let proto = normals(&mut rng, n);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(50);
    let mut names = Vec::with_capacity(50);
    for block in 0..5 {
        let fraction = 0.2 * (block + 1) as f64;
        for f in 0..10 {
            columns.push(mixed_copy(&mut rng, &proto, fraction));
            names.push(format!("x{}", block * 10 + f + 1));
        }
    }
    let loadings: Vec<(usize, f64)> =
        vec![(4, 1.0), (7, -2.0), (24, -4.0), (46, 8.0), (48, 4.0)];
    let z: Vec<f64> = (0..n)
        .map(|i| loadings.iter().map(|&(j, w)| w * columns[j][i]).sum())
        .collect();
    let y: Vec<f64> = z
        .iter()
        .map(|&zi| {
            let e: f64 = StandardNormal.sample(&mut rng);
            zi + e
        })
        .collect();
    Ok(OneFactorData { dataset: to_dataset(columns, names, y)?, z, loadings })
}

#[derive(Debug, Clone)]
pub struct TwoFactorData {
    pub dataset: Dataset,
    /// Z₁ = 3x₃ − 2x₈ − 4x₁₃ + 8x₁₈ (linear effect on Y).
    pub z1: Vec<f64>,
    /// Z₂ = 2x₂₅ + 4x₃₅ (quadratic effect on Y).
    pub z2: Vec<f64>,
    pub loadings1: Vec<(usize, f64)>,
    pub loadings2: Vec<(usize, f64)>,
}

/// Two-factor design: two uncorrelated 20-feature sets (alter fractions
/// 15/35% and 55/85% per half-set); Y = Z₁ + Z₂² + ε.
pub fn gen_two_factor(n: usize, seed_value: u64) -> Result<TwoFactorData> {
    if n < 50 {
        return Err(Error::contract("need n ≥ 50"));
    }
    let mut rng = seed::rng(seed_value, "simgen-twofactor", 0);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(40);
    let mut names = Vec::with_capacity(40);
    for (set, fractions) in [(0usize, [0.15, 0.35]), (1usize, [0.55, 0.85])] {
        let proto = normals(&mut rng, n);
        for (half, &fraction) in fractions.iter().enumerate() {
            for f in 0..10 {
                columns.push(mixed_copy(&mut rng, &proto, fraction));
                names.push(format!("x{}", set * 20 + half * 10 + f + 1));
            }
        }
    }
    let loadings1: Vec<(usize, f64)> = vec![(2, 3.0), (7, -2.0), (12, -4.0), (17, 8.0)];
    let loadings2: Vec<(usize, f64)> = vec![(24, 2.0), (34, 4.0)];
    let z1: Vec<f64> = (0..n)
        .map(|i| loadings1.iter().map(|&(j, w)| w * columns[j][i]).sum())
        .collect();
    let z2: Vec<f64> = (0..n)
        .map(|i| loadings2.iter().map(|&(j, w)| w * columns[j][i]).sum())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            z1[i] + z2[i] * z2[i] + e
        })
        .collect();
    Ok(TwoFactorData {
        dataset: to_dataset(columns, names, y)?,
        z1,
        z2,
        loadings1,
        loadings2,
    })
}

fn truth_entry(
    factors: Vec<(&str, Vec<f64>)>,
    loadings: Vec<(&str, &[(usize, f64)])>,
    names: &[String],
) -> Truth {
    let mut f = IndexMap::new();
    for (k, v) in factors {
        f.insert(k.to_string(), v);
    }
    let mut l = IndexMap::new();
    for (k, pairs) in loadings {
        let mut inner = IndexMap::new();
        for &(j, w) in pairs {
            inner.insert(names[j].clone(), w);
        }
        l.insert(k.to_string(), inner);
    }
    Truth { factors: f, loadings: l }
}

/// Unified entry point used by the `simulate` command. `alter` applies to the
/// within-corr scenario only (defaults to 10% in every group).
pub fn generate(
    scenario: Scenario,
    n: usize,
    seed_value: u64,
    alter: Option<[f64; 4]>,
) -> Result<SimOutput> {
    match scenario {
        Scenario::DependentGroups => {
            let (dataset, groups) = gen_dependent_groups(n, seed_value)?;
            Ok(SimOutput { dataset, groups: Some(groups), truth: None })
        }
        Scenario::WithinCorr => {
            let (dataset, groups) =
                gen_within_corr(n, seed_value, alter.unwrap_or([0.1; 4]))?;
            Ok(SimOutput { dataset, groups: Some(groups), truth: None })
        }
        Scenario::GroupSize => {
            let (dataset, groups) = gen_group_size(n, seed_value)?;
            Ok(SimOutput { dataset, groups: Some(groups), truth: None })
        }
        Scenario::OneFactor => {
            let out = gen_one_factor(n, seed_value)?;
            let truth = truth_entry(
                vec![("Z", out.z.clone())],
                vec![("Z", &out.loadings)],
                out.dataset.feature_names(),
            );
            Ok(SimOutput { dataset: out.dataset, groups: None, truth: Some(truth) })
        }
        Scenario::TwoFactor => {
            let out = gen_two_factor(n, seed_value)?;
            let truth = truth_entry(
                vec![("Z1", out.z1.clone()), ("Z2", out.z2.clone())],
                vec![("Z1", &out.loadings1), ("Z2", &out.loadings2)],
                out.dataset.feature_names(),
            );
            Ok(SimOutput { dataset: out.dataset, groups: None, truth: Some(truth) })
        }
    }
}
