//! Target-side kernels and Gram matrices.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Kernel choice for the target Gram matrix L.
///
/// `Rbf` with `bandwidth: None` uses the median heuristic: 2σ² equals the
/// median of pairwise squared distances over i > j. `Identity` yields the
/// identity matrix, which turns supervised sparse PCA into plain sparse PCA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf {
        /// The 2σ² value; `None` requests the median heuristic.
        bandwidth: Option<f64>,
    },
    Identity,
}

/// Median of pairwise squared distances (i > j); errors when zero, which
/// would collapse the RBF kernel.
pub fn median_sq_distance(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::contract("median heuristic needs n ≥ 2"));
    }
    let mut dists = Vec::with_capacity(y.len() * (y.len() - 1) / 2);
    for i in 1..y.len() {
        for j in 0..i {
            dists.push((y[i] - y[j]).powi(2));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median <= 0.0 {
        return Err(Error::numeric(
            "median pairwise distance is 0 (all targets identical); pass an explicit bandwidth",
        ));
    }
    Ok(median)
}

/// n×n Gram matrix of `kernel` over the target values.
pub fn gram(kernel: &Kernel, y: &[f64]) -> Result<Array2<f64>> {
    let n = y.len();
    if n < 2 {
        return Err(Error::contract("gram needs n ≥ 2"));
    }
    match kernel {
        Kernel::Identity => Ok(Array2::eye(n)),
        Kernel::Linear => {
            let mut l = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    l[[i, j]] = y[i] * y[j];
                }
            }
            Ok(l)
        }
        Kernel::Rbf { bandwidth } => {
            let two_sigma_sq = match bandwidth {
                Some(b) => {
                    if *b <= 0.0 {
                        return Err(Error::contract("rbf bandwidth must be > 0"));
                    }
                    *b
                }
                None => median_sq_distance(y)?,
            };
            let mut l = Array2::zeros((n, n));
            for i in 0..n {
                l[[i, i]] = 1.0;
                for j in 0..i {
                    let v = (-(y[i] - y[j]).powi(2) / two_sigma_sq).exp();
                    l[[i, j]] = v;
                    l[[j, i]] = v;
                }
            }
            Ok(l)
        }
    }
}
