//! Combined features effect plots.
//!
//! For each observation i, every row of the dataset gets observation i's
//! values on the group's columns; the model predicts that replaced matrix and
//! the mean prediction becomes i's y-coordinate. The x-coordinate is a sparse
//! linear projection of i's group values (loadings usually come from sparse
//! SPCA). Predictions are computed once per group and reused across that
//! group's components, which only change the x-coordinates.
//!
//! Also here: a PCA-grid baseline that pins one principal-component score to
//! grid values and back-transforms, polynomial trend fits on an equidistant
//! 50-point grid, and the normal-approximation aggregation of trends across
//! repeated runs.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, sym_eigen};
use crate::model::Model;
use crate::seed;
use crate::svg::{fmt, Svg};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Grid length used by trend fits.
pub const TREND_GRID: usize = 50;

#[derive(Debug, Clone, Copy)]
pub struct CfepConfig {
    /// Above this row count, replacement batches are subsampled to the cap
    /// (a flagged approximation; the default covers every row exactly).
    pub replacement_cap: usize,
    pub seed: u64,
}

impl Default for CfepConfig {
    fn default() -> Self {
        CfepConfig { replacement_cap: 2000, seed: 0 }
    }
}

/// Per-observation (projection, mean replaced prediction) pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CfepData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CfepData {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("obs_id,x,y\n");
        for i in 0..self.x.len() {
            out.push_str(&format!("{},{},{}\n", i, self.x[i], self.y[i]));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

fn kahan_mean(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc / values.len() as f64
}

fn validate_group(data: &Dataset, group: &[usize]) -> Result<()> {
    if group.is_empty() {
        return Err(Error::contract("group must be non-empty"));
    }
    if let Some(&bad) = group.iter().find(|&&j| j >= data.p()) {
        return Err(Error::contract(format!(
            "feature index {bad} out of range (p = {})",
            data.p()
        )));
    }
    Ok(())
}

/// Mean replaced prediction per observation: the expensive part of a CFEP,
/// shared across all components of one group. Exactly one prediction batch of
/// `min(n, cap)` rows per observation.
pub fn replaced_mean_predictions(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    cfg: &CfepConfig,
) -> Result<Vec<f64>> {
    validate_group(data, group)?;
    if let Some(w) = model.width() {
        if w != data.p() {
            return Err(Error::contract("model width does not match data"));
        }
    }
    let n = data.n();
    let replacement_rows: Vec<usize> = if n <= cfg.replacement_cap {
        (0..n).collect()
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut seed::rng(cfg.seed, "cfep-cap", 0));
        let mut keep = rows[..cfg.replacement_cap].to_vec();
        keep.sort_unstable();
        keep
    };
    let base = data.features().select(ndarray::Axis(0), &replacement_rows);

    (0..n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut replaced = base.clone();
            for &c in group {
                let value = data.features()[[i, c]];
                for r in 0..replaced.nrows() {
                    replaced[[r, c]] = value;
                }
            }
            let preds = model.predict(&replaced.view());
            let mean = kahan_mean(&preds);
            if !mean.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite mean replaced prediction for observation {i}"
                )));
            }
            Ok(mean)
        })
        .collect()
}

/// CFEP with explicit x-coordinates (e.g. SPCA projections on standardized
/// features).
pub fn compute_cfep_with_projection(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    projection: Vec<f64>,
    cfg: &CfepConfig,
) -> Result<CfepData> {
    if projection.len() != data.n() {
        return Err(Error::contract("projection length must equal n"));
    }
    let y = replaced_mean_predictions(model, data, group, cfg)?;
    Ok(CfepData { x: projection, y })
}

/// CFEP with x-coordinates Σ_j loading_j · x_j on raw feature values.
/// `loadings` pairs feature indices (within the group) with weights.
pub fn compute_cfep(
    model: &dyn Model,
    data: &Dataset,
    group: &[usize],
    loadings: &[(usize, f64)],
    cfg: &CfepConfig,
) -> Result<CfepData> {
    validate_group(data, group)?;
    for (j, _) in loadings {
        if !group.contains(j) {
            return Err(Error::contract(format!(
                "loading index {j} is not part of the group"
            )));
        }
    }
    let x: Vec<f64> = (0..data.n())
        .map(|i| {
            loadings
                .iter()
                .map(|&(j, w)| w * data.features()[[i, j]])
                .sum()
        })
        .collect();
    compute_cfep_with_projection(model, data, group, x, cfg)
}

/// PCA-grid baseline effect curve.
#[derive(Debug, Clone, Serialize)]
pub struct EffectCurve {
    pub grid: Vec<f64>,
    pub mean_prediction: Vec<f64>,
}

/// Pins the `component`-th (0-based) principal-component score of
/// standardized features to an equidistant grid, back-transforms to feature
/// space, predicts, and averages.
pub fn totalvis(
    model: &dyn Model,
    data: &Dataset,
    component: usize,
    grid_size: usize,
) -> Result<EffectCurve> {
    if grid_size < 2 {
        return Err(Error::contract("grid size must be ≥ 2"));
    }
    if component >= data.p() {
        return Err(Error::contract(format!(
            "component {component} out of range (p = {})",
            data.p()
        )));
    }
    let n = data.n();
    let p = data.p();
    let x = data.features();
    let mut means = vec![0.0; p];
    let mut sds = vec![1.0; p];
    let mut xs = x.clone();
    for j in 0..p {
        let mean = x.column(j).sum() / n as f64;
        let var =
            x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            xs[[i, j]] = (x[[i, j]] - mean) / sd;
        }
        means[j] = mean;
        sds[j] = sd;
    }
    let cov = xs.t().dot(&xs) / (n as f64 - 1.0);
    let (_, rotation) = sym_eigen(&cov);
    let scores = xs.dot(&rotation);

    let col = scores.column(component);
    let lo = col.iter().cloned().fold(f64::MAX, f64::min);
    let hi = col.iter().cloned().fold(f64::MIN, f64::max);
    let step = (hi - lo) / (grid_size - 1) as f64;

    let grid: Vec<f64> = (0..grid_size).map(|g| lo + step * g as f64).collect();
    let mean_prediction: Vec<f64> = grid
        .par_iter()
        .map(|&value| {
            let mut pinned = scores.clone();
            for i in 0..n {
                pinned[[i, component]] = value;
            }
            let mut back = pinned.dot(&rotation.t());
            for j in 0..p {
                for i in 0..n {
                    back[[i, j]] = back[[i, j]] * sds[j] + means[j];
                }
            }
            let preds = model.predict(&back.view());
            kahan_mean(&preds)
        })
        .collect();
    Ok(EffectCurve { grid, mean_prediction })
}

/// Least-squares polynomial trend evaluated on a 50-point equidistant grid.
#[derive(Debug, Clone, Serialize)]
pub struct TrendFit {
    pub degree: usize,
    /// Ascending powers: coefficients[k] multiplies x^k.
    pub coefficients: Vec<f64>,
    pub grid: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl TrendFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_on_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn slope(&self) -> f64 {
        self.coefficients.get(1).copied().unwrap_or(0.0)
    }

    pub fn curvature(&self) -> f64 {
        self.coefficients.get(2).copied().unwrap_or(0.0)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// Least-squares polynomial coefficients (ascending powers).
pub fn fit_polynomial(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    if degree == 0 || degree > 2 {
        return Err(Error::contract("trend degree must be 1 or 2"));
    }
    if x.len() != y.len() || x.len() < degree + 2 {
        return Err(Error::contract(format!(
            "need at least {} points for a degree-{degree} trend",
            degree + 2
        )));
    }
    let spread = x.iter().cloned().fold(f64::MIN, f64::max)
        - x.iter().cloned().fold(f64::MAX, f64::min);
    if spread <= 0.0 {
        return Err(Error::numeric("degenerate x values (all equal)"));
    }
    let k = degree + 1;
    let mut m = Array2::<f64>::zeros((k, k));
    let mut rhs = Array1::<f64>::zeros(k);
    for (&xi, &yi) in x.iter().zip(y) {
        let mut powers = [1.0f64; 5];
        for d in 1..=2 * degree {
            powers[d] = powers[d - 1] * xi;
        }
        for r in 0..k {
            for c in 0..k {
                m[[r, c]] += powers[r + c];
            }
            rhs[r] += yi * powers[r];
        }
    }
    let coef = solve_dense(&m, &rhs)?;
    Ok(coef.to_vec())
}

/// Fits a degree-1 or degree-2 trend to a CFEP cloud, evaluated on an
/// equidistant 50-point grid over the projection range.
pub fn fit_trend(cfep: &CfepData, degree: usize) -> Result<TrendFit> {
    let coefficients = fit_polynomial(&cfep.x, &cfep.y, degree)?;
    let lo = cfep.x.iter().cloned().fold(f64::MAX, f64::min);
    let hi = cfep.x.iter().cloned().fold(f64::MIN, f64::max);
    let step = (hi - lo) / (TREND_GRID - 1) as f64;
    let grid: Vec<f64> = (0..TREND_GRID).map(|g| lo + step * g as f64).collect();
    let fit = TrendFit { degree, coefficients, grid: grid.clone(), fitted: Vec::new() };
    let fitted = fit.eval_on_grid(&grid);
    Ok(TrendFit { fitted, ..fit })
}

/// Grid-pointwise mean and 95% normal-approximation band over repeated
/// trend fits.
#[derive(Debug, Clone, Serialize)]
pub struct TrendBand {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn aggregate_trends(trends: &[TrendFit]) -> Result<TrendBand> {
    if trends.is_empty() {
        return Err(Error::contract("need at least one trend"));
    }
    let len = trends[0].grid.len();
    if trends.iter().any(|t| t.grid.len() != len) {
        return Err(Error::contract("trends have mixed grid lengths"));
    }
    let m = trends.len() as f64;
    let mut grid = vec![0.0; len];
    let mut mean = vec![0.0; len];
    let mut lower = vec![0.0; len];
    let mut upper = vec![0.0; len];
    for g in 0..len {
        let values: Vec<f64> = trends.iter().map(|t| t.fitted[g]).collect();
        let (mu, sd) = crate::linalg::mean_sd(&values);
        grid[g] = trends.iter().map(|t| t.grid[g]).sum::<f64>() / m;
        mean[g] = mu;
        lower[g] = mu - 1.96 * sd;
        upper[g] = mu + 1.96 * sd;
    }
    Ok(TrendBand { grid, mean, lower, upper })
}

/// Scatter plot of the CFEP cloud with an optional trend polyline;
/// deterministic bytes.
pub fn render_cfep_svg(
    cfep: &CfepData,
    trend: Option<&TrendFit>,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, cfep_svg_string(cfep, trend))?;
    Ok(())
}

pub(crate) fn cfep_svg_string(cfep: &CfepData, trend: Option<&TrendFit>) -> String {
    let width = 640.0;
    let height = 440.0;
    let margin = 55.0;
    let mut svg = Svg::new(width, height);
    if cfep.is_empty() {
        svg.text(width / 2.0, height / 2.0, 16.0, "middle", "no points");
        return svg.into_string();
    }
    let (x_lo, x_hi) = bounds(&cfep.x);
    let mut y_all = cfep.y.clone();
    if let Some(t) = trend {
        y_all.extend_from_slice(&t.fitted);
    }
    let (y_lo, y_hi) = bounds(&y_all);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let sx = margin + (x - x_lo) / (x_hi - x_lo).max(1e-300) * (width - 2.0 * margin);
        let sy = height - margin - (y - y_lo) / (y_hi - y_lo).max(1e-300) * (height - 2.0 * margin);
        (sx, sy)
    };

    // axes
    svg.line(margin, height - margin, width - margin, height - margin, "#333333", 1.0);
    svg.line(margin, margin, margin, height - margin, "#333333", 1.0);
    svg.text(margin, height - margin + 18.0, 11.0, "start", &fmt(x_lo));
    svg.text(width - margin, height - margin + 18.0, 11.0, "end", &fmt(x_hi));
    svg.text(margin - 6.0, height - margin, 11.0, "end", &fmt(y_lo));
    svg.text(margin - 6.0, margin + 4.0, 11.0, "end", &fmt(y_hi));
    svg.text(width / 2.0, height - 12.0, 12.0, "middle", "projection");
    svg.text(14.0, height / 2.0, 12.0, "middle", "mean prediction");

    for i in 0..cfep.len() {
        let (sx, sy) = to_px(cfep.x[i], cfep.y[i]);
        svg.circle(sx, sy, 2.0, "#4e79a7", 0.55);
    }
    if let Some(t) = trend {
        let pts: Vec<(f64, f64)> = t
            .grid
            .iter()
            .zip(&t.fitted)
            .map(|(&x, &y)| to_px(x, y))
            .collect();
        svg.polyline(&pts, "#e15759", 2.0);
    }
    svg.into_string()
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
