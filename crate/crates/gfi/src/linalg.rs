//! Small dense linear algebra kernels used across the crate: a cyclic Jacobi
//! eigensolver for symmetric matrices, Cholesky for ridge systems, and a
//! pivoted Gaussian solver for tiny polynomial fits.
//!
//! All routines are deterministic and allocation-straightforward; matrix sizes
//! here are at most a few hundred.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvector `i` is column `i`.
pub fn sym_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen requires a square matrix");
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    if n <= 1 {
        return (m.diag().to_vec(), v);
    }

    for _sweep in 0..64 {
        let mut changed = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[[p, q]];
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                if apq.abs() <= 1e-18 * (app.abs() + aqq.abs() + 1e-300) {
                    continue;
                }
                changed = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let mkp = m[[k, p]];
                        let mkq = m[[k, q]];
                        m[[k, p]] = c * mkp - s * mkq;
                        m[[p, k]] = m[[k, p]];
                        m[[k, q]] = s * mkp + c * mkq;
                        m[[q, k]] = m[[k, q]];
                    }
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = v[[k, src]];
        }
    }
    (values, vectors)
}

/// Solve `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::contract("cholesky_solve: dimension mismatch"));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 1e-12 * (1.0 + a[[i, i]].abs()) {
                    return Err(Error::numeric(
                        "singular or indefinite system; a ridge penalty λ > 0 makes it solvable",
                    ));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    // forward then backward substitution
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    Ok(x)
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::contract("solve_dense: dimension mismatch"));
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[[row, col]].abs() > m[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if m[[pivot, col]].abs() < 1e-300 {
            return Err(Error::numeric("solve_dense: singular system"));
        }
        if pivot != col {
            for k in 0..n {
                m.swap([col, k], [pivot, k]);
            }
            rhs.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = m[[row, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[[row, k]] -= f * m[[col, k]];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = rhs[i];
        for k in i + 1..n {
            sum -= m[[i, k]] * x[k];
        }
        x[i] = sum / m[[i, i]];
    }
    Ok(x)
}

/// Sample mean and sample standard deviation (n−1 denominator; 0 for n < 2).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pearson correlation of two equal-length slices.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 3 and 1
        let a = arr2(&[[2.0, 1.0], [1.0, 2.0]]);
        let (vals, vecs) = sym_eigen(&a);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        // residual ‖Av − λv‖ per pair
        for i in 0..2 {
            for r in 0..2 {
                let av = a[[r, 0]] * vecs[[0, i]] + a[[r, 1]] * vecs[[1, i]];
                assert_abs_diff_eq!(av, vals[i] * vecs[[r, i]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        use rand::Rng;
        let mut rng = crate::seed::rng(5, "linalg-test", 0);
        let n = 24;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        let (vals, vecs) = sym_eigen(&a);
        // A = V Λ Vᵀ
        let mut recon = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    recon[[i, j]] += vals[k] * vecs[[i, k]] * vecs[[j, k]];
                }
            }
        }
        let err: f64 = (&recon - &a).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-9, "reconstruction error {err}");
    }

    #[test]
    fn cholesky_solves_spd() {
        let a = arr2(&[[4.0, 1.0], [1.0, 3.0]]);
        let b = Array1::from(vec![1.0, 2.0]);
        let x = cholesky_solve(&a, &b).unwrap();
        assert_abs_diff_eq!(4.0 * x[0] + x[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[0] + 3.0 * x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        let b = Array1::from(vec![1.0, 1.0]);
        assert!(cholesky_solve(&a, &b).is_err());
    }

    #[test]
    fn mean_sd_uses_sample_denominator() {
        let (m, s) = mean_sd(&[0.0, 2.0]);
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, std::f64::consts::SQRT_2, epsilon = 1e-12);
    }
}
