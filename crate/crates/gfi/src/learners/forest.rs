//! Bagged CART regression forest.
//!
//! Each tree is fit on a bootstrap sample with a random feature subset per
//! node and a variance-reduction split criterion. Tied splits break toward
//! the lowest feature index, then the lowest threshold, so fits are fully
//! deterministic given the seed. Prediction is the mean over trees.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Learner, Model};
use crate::seed;
use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct ForestLearner {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Fraction of features tried at each split (≥ 1 feature).
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for ForestLearner {
    fn default() -> Self {
        ForestLearner {
            trees: 300,
            max_depth: None,
            min_leaf: 5,
            feature_fraction: 1.0 / 3.0,
            seed: 0,
        }
    }
}

impl ForestLearner {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, trees: usize) -> Self {
        self.trees = trees;
        self
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

pub struct ForestModel {
    trees: Vec<Tree>,
    width: usize,
}

impl ForestModel {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Per-tree predictions for one row, in tree order.
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }
}

impl Model for ForestModel {
    fn predict(&self, features: &ArrayView2<f64>) -> Vec<f64> {
        let inv = 1.0 / self.trees.len() as f64;
        let mut row_buf = vec![0.0; features.ncols()];
        features
            .rows()
            .into_iter()
            .map(|row| {
                for (dst, src) in row_buf.iter_mut().zip(row.iter()) {
                    *dst = *src;
                }
                self.trees
                    .iter()
                    .map(|t| t.predict_row(&row_buf))
                    .sum::<f64>()
                    * inv
            })
            .collect()
    }

    fn width(&self) -> Option<usize> {
        Some(self.width)
    }
}

struct TreeBuilder<'a> {
    x: &'a ndarray::Array2<f64>,
    y: &'a ndarray::Array1<f64>,
    min_leaf: usize,
    max_depth: Option<usize>,
    mtry: usize,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn mean(&self, rows: &[usize]) -> f64 {
        rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64
    }

    fn build(&mut self, rows: &mut Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf(0.0));

        let done_depth = self.max_depth.is_some_and(|d| depth >= d);
        if done_depth || rows.len() < 2 * self.min_leaf {
            self.nodes[id as usize] = Node::Leaf(self.mean(rows));
            return id;
        }

        let p = self.x.ncols();
        let mut candidates: Vec<usize> = sample(rng, p, self.mtry.min(p)).into_vec();
        candidates.sort_unstable();

        // best = (sse_left + sse_right, feature, threshold); strict improvement
        // over candidates scanned in ascending feature/threshold order keeps
        // ties at the lowest feature index and threshold.
        let sum_all: f64 = rows.iter().map(|&i| self.y[i]).sum();
        let sq_all: f64 = rows.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let n = rows.len() as f64;
        let parent_sse = sq_all - sum_all * sum_all / n;
        let mut best: Option<(f64, usize, f64)> = None;

        let mut order: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            order.clear();
            order.extend(rows.iter().map(|&i| (self.x[[i, feature]], self.y[i])));
            order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut sum_left = 0.0;
            let mut sq_left = 0.0;
            for split_at in 1..order.len() {
                let (xv, yv) = order[split_at - 1];
                sum_left += yv;
                sq_left += yv * yv;
                if split_at < self.min_leaf || order.len() - split_at < self.min_leaf {
                    continue;
                }
                let next_x = order[split_at].0;
                if next_x <= xv {
                    continue; // no distinct cut point here
                }
                let nl = split_at as f64;
                let nr = n - nl;
                let sum_right = sum_all - sum_left;
                let sq_right = sq_all - sq_left;
                let sse = (sq_left - sum_left * sum_left / nl)
                    + (sq_right - sum_right * sum_right / nr);
                if best.map_or(sse < parent_sse - 1e-12, |(b, _, _)| sse < b) {
                    best = Some((sse, feature, 0.5 * (xv + next_x)));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            self.nodes[id as usize] = Node::Leaf(self.mean(rows));
            return id;
        };

        let mut left_rows: Vec<usize> = Vec::with_capacity(rows.len() / 2);
        let mut right_rows: Vec<usize> = Vec::with_capacity(rows.len() / 2);
        for &i in rows.iter() {
            if self.x[[i, feature]] <= threshold {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        let left = self.build(&mut left_rows, depth + 1, rng);
        let right = self.build(&mut right_rows, depth + 1, rng);
        self.nodes[id as usize] = Node::Split { feature, threshold, left, right };
        id
    }
}

impl ForestLearner {
    /// Fits and returns the concrete forest (the trait object path wraps this).
    pub fn fit_forest(&self, data: &Dataset) -> Result<ForestModel> {
        if self.trees == 0 {
            return Err(Error::contract("forest needs ≥ 1 tree"));
        }
        if self.min_leaf == 0 {
            return Err(Error::contract("min leaf must be ≥ 1"));
        }
        let n = data.n();
        let p = data.p();
        let mtry = ((p as f64 * self.feature_fraction).ceil() as usize).clamp(1, p);

        let trees: Vec<Tree> = (0..self.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(self.seed, "forest-tree", t as u64);
                let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut builder = TreeBuilder {
                    x: data.features(),
                    y: data.target(),
                    min_leaf: self.min_leaf,
                    max_depth: self.max_depth,
                    mtry,
                    nodes: Vec::new(),
                };
                builder.build(&mut rows, 0, &mut rng);
                Tree { nodes: builder.nodes }
            })
            .collect();

        Ok(ForestModel { trees, width: p })
    }
}

impl Learner for ForestLearner {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Model>> {
        Ok(Box::new(self.fit_forest(data)?))
    }

    fn id(&self) -> String {
        format!(
            "forest(trees={},min_leaf={},max_depth={:?},feature_fraction={:.3},seed={})",
            self.trees, self.min_leaf, self.max_depth, self.feature_fraction, self.seed
        )
    }
}
