//! Centering, the empirical Hilbert-Schmidt independence criterion, and the
//! L = ΔΔᵀ factorization feeding Ψ = ΔᵀHX.

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use ndarray::{Array2, ArrayView2};

/// Applies the centering matrix H = I − n⁻¹eeᵀ from the left, i.e. subtracts
/// each column's mean. H is never materialized.
pub fn centering_apply(m: &ArrayView2<f64>) -> Array2<f64> {
    let n = m.nrows() as f64;
    let mut out = m.to_owned();
    for mut col in out.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

/// HMH: centers rows and columns (and restores the grand mean term).
fn double_center(m: &ArrayView2<f64>) -> Array2<f64> {
    let n = m.nrows() as f64;
    let row_means: Vec<f64> = m.rows().into_iter().map(|r| r.sum() / n).collect();
    let col_means: Vec<f64> = m.columns().into_iter().map(|c| c.sum() / n).collect();
    let grand = row_means.iter().sum::<f64>() / n;
    let mut out = m.to_owned();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[[i, j]] += grand - row_means[i] - col_means[j];
        }
    }
    out
}

/// Empirical HSIC: (n−1)⁻² tr(KHLH).
pub fn empirical_hsic(k: &ArrayView2<f64>, l: &ArrayView2<f64>) -> Result<f64> {
    let n = k.nrows();
    if k.ncols() != n || l.nrows() != n || l.ncols() != n {
        return Err(Error::contract("HSIC needs two square matrices of equal size"));
    }
    if n < 2 {
        return Err(Error::contract("HSIC needs n ≥ 2"));
    }
    let l_centered = double_center(l);
    // tr(K · HLH) = Σ_ij K_ij (HLH)_ij for symmetric inputs
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..n {
            trace += k[[i, j]] * l_centered[[i, j]];
        }
    }
    Ok(trace / ((n - 1) as f64).powi(2))
}

/// Factorizes a positive semidefinite Gram matrix as L = ΔΔᵀ with
/// Δ = E·diag(√λ) from the eigendecomposition. Slightly negative eigenvalues
/// (numerical noise) are clipped to zero; anything below −1e-6·‖L‖_F is
/// rejected as not a kernel.
pub fn decompose_l(l: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::contract("decompose_l needs a square matrix"));
    }
    let scale = l.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let (values, vectors) = sym_eigen(&l.to_owned());
    if let Some(&worst) = values.iter().find(|&&v| v < -1e-6 * scale) {
        return Err(Error::contract(format!(
            "matrix has eigenvalue {worst:.3e}; not positive semidefinite, not a kernel"
        )));
    }
    let mut delta = vectors;
    for (j, &lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        for i in 0..n {
            delta[[i, j]] *= root;
        }
    }
    Ok(delta)
}

/// Ψ = Δᵀ · (column-centered X), the matrix whose penalized decomposition
/// drives sparse supervised PCA.
pub fn build_psi(x: &ArrayView2<f64>, l: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != l.nrows() {
        return Err(Error::contract(format!(
            "X has {} rows but L is {}×{}",
            x.nrows(),
            l.nrows(),
            l.ncols()
        )));
    }
    let delta = decompose_l(l)?;
    let centered = centering_apply(x);
    Ok(delta.t().dot(&centered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimred::kernel::{gram, Kernel};
    use crate::seed;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn centering_hand_values() {
        let m = arr2(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let c = centering_apply(&m.view());
        assert_eq!(c.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        // constant column → zero column
        assert!(c.column(1).iter().all(|&v| v == 0.0));
        // idempotence
        let cc = centering_apply(&c.view());
        for (a, b) in cc.iter().zip(c.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn hsic_zero_for_constant_target() {
        let y = vec![4.0; 6];
        let l = gram(&Kernel::Linear, &y).unwrap();
        let mut rng = seed::rng(1, "hsic-const", 0);
        let x: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = gram(&Kernel::Linear, &x).unwrap();
        let h = empirical_hsic(&k.view(), &l.view()).unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn hsic_symmetric_and_offset_invariant() {
        let mut rng = seed::rng(2, "hsic-sym", 0);
        let x: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let k = gram(&Kernel::Rbf { bandwidth: Some(1.0) }, &x).unwrap();
        let l = gram(&Kernel::Rbf { bandwidth: Some(1.0) }, &y).unwrap();
        let a = empirical_hsic(&k.view(), &l.view()).unwrap();
        let b = empirical_hsic(&l.view(), &k.view()).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        // H annihilates constants added to every entry of K
        let shifted = &k + 7.3;
        let c = empirical_hsic(&shifted.view(), &l.view()).unwrap();
        assert_abs_diff_eq!(a, c, epsilon = 1e-9);
    }

    #[test]
    fn hsic_permutation_test_separates_dependence() {
        let n = 100;
        let mut rng = seed::rng(5, "hsic-perm", 0);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect(); // deterministic dependence
        let k = gram(&Kernel::Rbf { bandwidth: None }, &x).unwrap();
        let l = gram(&Kernel::Rbf { bandwidth: None }, &y).unwrap();
        let observed = empirical_hsic(&k.view(), &l.view()).unwrap();

        // permutation-test oracle: shuffle the target labels
        let mut null = Vec::with_capacity(500);
        for s in 0..500u64 {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut seed::rng(17, "hsic-null", s));
            let mut l_perm = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    l_perm[[i, j]] = l[[perm[i], perm[j]]];
                }
            }
            null.push(empirical_hsic(&k.view(), &l_perm.view()).unwrap());
        }
        null.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q95 = null[(0.95 * 500.0) as usize];
        assert!(observed > q95, "observed {observed} vs q95 {q95}");
    }

    #[test]
    fn decompose_identity_and_rank_one() {
        let eye = Array2::<f64>::eye(4);
        let delta = decompose_l(&eye.view()).unwrap();
        let recon = delta.dot(&delta.t());
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(recon[[i, j]], eye[[i, j]], epsilon = 1e-10);
            }
        }

        // rank-1: L = yyᵀ → exactly one non-vanishing column, proportional to y
        let y = [1.0, -2.0, 0.5];
        let mut l = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                l[[i, j]] = y[i] * y[j];
            }
        }
        let delta = decompose_l(&l.view()).unwrap();
        let norms: Vec<f64> = (0..3)
            .map(|j| delta.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let big: Vec<usize> = (0..3).filter(|&j| norms[j] > 1e-8).collect();
        assert_eq!(big.len(), 1);
        let col = delta.column(big[0]);
        let scale = col[0] / y[0];
        for i in 0..3 {
            assert_abs_diff_eq!(col[i], scale * y[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn decompose_reconstructs_random_psd() {
        for s in 0..10u64 {
            let mut rng = seed::rng(s, "psd", 0);
            let n = 12;
            let a = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
            let l = a.dot(&a.t());
            let delta = decompose_l(&l.view()).unwrap();
            let recon = delta.dot(&delta.t());
            let num: f64 = (&recon - &l).iter().map(|v| v * v).sum::<f64>().sqrt();
            let den: f64 = l.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num <= 1e-8 * den, "seed {s}: rel residual {}", num / den);
        }
    }

    #[test]
    fn decompose_rejects_indefinite() {
        let m = arr2(&[[1.0, 0.0], [0.0, -1.0]]);
        assert!(decompose_l(&m.view()).is_err());
    }

    #[test]
    fn psi_with_identity_kernel_is_centered_x() {
        let x = arr2(&[[1.0, 4.0], [2.0, 4.0], [3.0, 4.0]]);
        let l = Array2::<f64>::eye(3);
        let psi = build_psi(&x.view(), &l.view()).unwrap();
        // Δ from the identity is orthonormal (signed permutation), so compare
        // via ΨᵀΨ = (HX)ᵀ(HX)
        let centered = centering_apply(&x.view());
        let lhs = psi.t().dot(&psi);
        let rhs = centered.t().dot(&centered);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(lhs[[i, j]], rhs[[i, j]], epsilon = 1e-10);
            }
        }
        // constant feature column → zero Ψ column
        assert!(psi.column(1).iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn psi_gram_eigen_equation_holds() {
        let mut rng = seed::rng(9, "psi-eigen", 0);
        let x = Array2::from_shape_fn((20, 4), |_| rng.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..20).map(|i| x[[i, 0]] + 0.1 * i as f64).collect();
        let l = gram(&Kernel::Rbf { bandwidth: None }, &y).unwrap();
        let psi = build_psi(&x.view(), &l.view()).unwrap();
        let gram_psi = psi.t().dot(&psi);
        let (values, vectors) = sym_eigen(&gram_psi);
        for k in 0..4 {
            for r in 0..4 {
                let av: f64 = (0..4).map(|c| gram_psi[[r, c]] * vectors[[c, k]]).sum();
                assert_abs_diff_eq!(av, values[k] * vectors[[r, k]], epsilon = 1e-8);
            }
        }
    }
}
