//! Sparse supervised PCA via HSIC and penalized matrix decomposition.
//!
//! The pipeline: build the target Gram matrix L, factor it as L = ΔΔᵀ, form
//! Ψ = ΔᵀHX on standardized features, and extract components by repeated
//! rank-1 PMD with deflation, keeping successive left factors orthogonal.
//! With the identity kernel the construction reduces to sparse (unsupervised)
//! PCA. The ℓ₁ budget per component is either fixed or chosen by
//! matrix-completion cross-validation.

mod hsic;
mod kernel;
mod pmd;

pub use hsic::{build_psi, centering_apply, decompose_l, empirical_hsic};
pub use kernel::{gram, median_sq_distance, Kernel};
pub use pmd::{pmd_rank1, pmd_rank1_masked, PmdFactor};

use crate::error::{Error, Result};
use crate::seed;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use std::io::Write;
use std::path::Path;

/// ℓ₁ budget policy for the loading vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CBudget {
    Fixed(f64),
    /// Matrix-completion CV over [`default_c_candidates`], per component.
    Cv,
}

/// Default CV candidate budgets: {1, 1.5, 2, 3, 5, √p}.
pub fn default_c_candidates(p: usize) -> Vec<f64> {
    let mut cands = vec![1.0, 1.5, 2.0, 3.0, 5.0, (p as f64).sqrt()];
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    cands
}

#[derive(Debug, Clone)]
pub struct SpcaResult {
    /// p×r column-sparse loading matrix V.
    pub loadings: Array2<f64>,
    /// uᵀΨv per component, descending in practice.
    pub singular_values: Vec<f64>,
    /// n×r projections of the standardized features, X_std·V.
    pub projections: Array2<f64>,
    /// HSIC-style objective per component: ‖Ψ₀v‖²/(n−1)² on the undeflated Ψ.
    pub objective: Vec<f64>,
    /// ℓ₁ budget used per component.
    pub c_used: Vec<f64>,
    /// Per-component convergence flag from the PMD solver.
    pub converged: Vec<bool>,
    /// n×r matrix of left factors u (mutually orthogonal across components).
    pub left_factors: Array2<f64>,
    /// Standardization applied before Ψ construction.
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
}

impl SpcaResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Loadings CSV `(component,feature_name,loading)`, zero loadings omitted,
    /// components 1-based.
    pub fn loadings_csv(&self, feature_names: &[String]) -> String {
        let mut out = String::from("component,feature_name,loading\n");
        for comp in 0..self.rank() {
            for (j, name) in feature_names.iter().enumerate() {
                let w = self.loadings[[j, comp]];
                if w != 0.0 {
                    out.push_str(&format!("{},{},{}\n", comp + 1, name, w));
                }
            }
        }
        out
    }

    pub fn write_loadings_csv(
        &self,
        path: impl AsRef<Path>,
        feature_names: &[String],
    ) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.loadings_csv(feature_names).as_bytes())?;
        Ok(())
    }
}

/// Columns scaled to mean 0, sd 1 (sample sd; constant columns stay at 0).
fn standardize(x: &ArrayView2<f64>) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let (n, p) = x.dim();
    let mut out = x.to_owned();
    let mut means = Vec::with_capacity(p);
    let mut sds = Vec::with_capacity(p);
    for j in 0..p {
        let mean = x.column(j).sum() / n as f64;
        let var = x
            .column(j)
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            out[[i, j]] = (x[[i, j]] - mean) / sd;
        }
        means.push(mean);
        sds.push(sd);
    }
    (out, means, sds)
}

/// Mean squared error between held-out Ψ entries and the rank-1 completion
/// fitted on the rest, one score per candidate budget.
pub(crate) fn cv_scores(
    psi: &ArrayView2<f64>,
    candidates: &[f64],
    seed_value: u64,
) -> Result<Vec<f64>> {
    let (n, p) = psi.dim();
    let mut rng = seed::rng(seed_value, "spca-cv-mask", 0);
    // hold out a random 10% of entries
    let mut mask = Array2::from_elem((n, p), true);
    let mut held_out = Vec::new();
    for i in 0..n {
        for j in 0..p {
            if rng.random_range(0.0..1.0) < 0.1 {
                mask[[i, j]] = false;
                held_out.push((i, j));
            }
        }
    }
    if held_out.is_empty() {
        // tiny matrices: force one held-out entry
        mask[[0, 0]] = false;
        held_out.push((0, 0));
    }
    candidates
        .iter()
        .map(|&c| {
            let factor = pmd_rank1_masked(psi, &mask, c)?;
            let mse = held_out
                .iter()
                .map(|&(i, j)| {
                    let recon = factor.lambda * factor.u[i] * factor.v[j];
                    (psi[[i, j]] - recon).powi(2)
                })
                .sum::<f64>()
                / held_out.len() as f64;
            Ok(mse)
        })
        .collect()
}

/// Picks the ℓ₁ budget by matrix-completion CV: mask 10% of Ψ's entries, fit
/// the rank-1 PMD on the rest per candidate, score the held-out mse, return
/// the argmin (ties to the smaller c, duplicates to the first occurrence).
pub fn choose_c_cv(psi: &ArrayView2<f64>, candidates: &[f64], seed_value: u64) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::contract("need at least one candidate budget"));
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let scores = cv_scores(psi, candidates, seed_value)?;
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best] && candidates[i] < candidates[best]);
        if better {
            best = i;
        }
    }
    Ok(candidates[best])
}

/// Sparse supervised PCA of `x` against `target` under `kernel`.
///
/// Extracts `r` components by repeated rank-1 PMD with deflation
/// Ψ ← Ψ − λuvᵀ; left factors are kept mutually orthogonal. Component signs
/// are normalized so each loading vector's largest-magnitude entry is
/// positive.
pub fn sparse_spca(
    x: &ArrayView2<f64>,
    target: &[f64],
    kernel: &Kernel,
    r: usize,
    budget: CBudget,
    seed_value: u64,
) -> Result<SpcaResult> {
    let (n, p) = x.dim();
    if target.len() != n {
        return Err(Error::contract("target length must match rows of X"));
    }
    if r < 1 || r > n.min(p) {
        return Err(Error::contract(format!(
            "rank must satisfy 1 ≤ r ≤ min(n, p) = {}, got {r}",
            n.min(p)
        )));
    }

    let (x_std, feature_means, feature_sds) = standardize(x);
    // identity kernel: Δ = I, so Ψ is just the (centered) standardized matrix
    let psi0 = match kernel {
        Kernel::Identity => centering_apply(&x_std.view()),
        _ => {
            let l = gram(kernel, target)?;
            build_psi(&x_std.view(), &l.view())?
        }
    };

    let mut psi = psi0.clone();
    let mut loadings = Array2::zeros((p, r));
    let mut us: Vec<Array1<f64>> = Vec::with_capacity(r);
    let mut singular_values = Vec::with_capacity(r);
    let mut objective = Vec::with_capacity(r);
    let mut c_used = Vec::with_capacity(r);
    let mut converged = Vec::with_capacity(r);

    for comp in 0..r {
        let c = match budget {
            CBudget::Fixed(c) => c,
            CBudget::Cv => choose_c_cv(
                &psi.view(),
                &default_c_candidates(p),
                seed::child_seed(seed_value, "spca-cv", comp as u64),
            )?,
        };
        let prev: Vec<ArrayView1<f64>> = us.iter().map(|u| u.view()).collect();
        let mut factor = pmd_rank1_ortho(&psi.view(), c, &prev)?;

        // sign convention: the largest-magnitude loading is positive
        let lead = factor
            .v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if factor.v[lead] < 0.0 {
            factor.v.mapv_inplace(|w| -w);
            factor.u.mapv_inplace(|w| -w);
        }

        let psi0_v = psi0.dot(&factor.v);
        objective.push(
            psi0_v.iter().map(|w| w * w).sum::<f64>() / ((n - 1) as f64).powi(2),
        );

        // deflate
        for i in 0..n {
            for j in 0..p {
                psi[[i, j]] -= factor.lambda * factor.u[i] * factor.v[j];
            }
        }
        for j in 0..p {
            loadings[[j, comp]] = factor.v[j];
        }
        singular_values.push(factor.lambda);
        c_used.push(c);
        converged.push(factor.converged);
        us.push(factor.u);
    }

    let projections = x_std.dot(&loadings);
    let mut left_factors = Array2::zeros((n, r));
    for (comp, u) in us.iter().enumerate() {
        for i in 0..n {
            left_factors[[i, comp]] = u[i];
        }
    }
    Ok(SpcaResult {
        loadings,
        singular_values,
        projections,
        objective,
        c_used,
        converged,
        left_factors,
        feature_means,
        feature_sds,
    })
}

use pmd::pmd_rank1_ortho;
