//! Tabular data model: a numeric feature matrix with named columns, a
//! regression target, and named (possibly overlapping) feature groups.
//!
//! Indices are 0-based internally; every external surface (CSV, group-spec
//! JSON, reports) speaks feature names only.

use crate::error::{Error, Result};
use indexmap::IndexMap;
use ndarray::{Array1, Array2, Axis};
use serde::Deserialize;
use std::path::Path;

/// An n×p feature matrix with unique column names and a length-n target.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    target: Array1<f64>,
}

impl Dataset {
    /// Validates: n ≥ 2, p ≥ 1, all values finite, names unique and matching p.
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        target: Array1<f64>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n < 2 {
            return Err(Error::data(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::data("need at least 1 feature column"));
        }
        if target.len() != n {
            return Err(Error::data(format!(
                "target length {} does not match {} rows",
                target.len(),
                n
            )));
        }
        if feature_names.len() != p {
            return Err(Error::data(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                p
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::data(format!("duplicate feature name '{name}'")));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("feature matrix contains non-finite values"));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("target contains non-finite values"));
        }
        Ok(Dataset {
            features,
            feature_names,
            target,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn target(&self) -> &Array1<f64> {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// New dataset restricted to `columns` (order preserved). The source is
    /// never mutated; downstream learners see the narrower width.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::contract("select_features: empty column set"));
        }
        for &c in columns {
            if c >= self.p() {
                return Err(Error::contract(format!(
                    "select_features: column {c} out of range (p = {})",
                    self.p()
                )));
            }
        }
        Ok(Dataset {
            features: self.features.select(Axis(1), columns),
            feature_names: columns
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            target: self.target.clone(),
        })
    }

    /// New dataset with `columns` removed.
    pub fn drop_features(&self, columns: &[usize]) -> Result<Dataset> {
        let keep: Vec<usize> = (0..self.p()).filter(|c| !columns.contains(c)).collect();
        if keep.is_empty() {
            return Err(Error::contract(
                "drop_features: would remove every feature",
            ));
        }
        self.select_features(&keep)
    }

    /// New dataset restricted to `rows` (duplicates allowed, e.g. bootstrap).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            target: self.target.select(Axis(0), rows),
        }
    }

    /// Reads a CSV with a header row; `target` names the target column, all
    /// other columns become features in file order. Any missing or
    /// unparseable cell is rejected with its 1-based data row number.
    pub fn from_csv(path: impl AsRef<Path>, target: &str) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path.as_ref())?;
        let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let target_col = headers
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| Error::data(format!("target column '{target}' not found in header")))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target_col)
            .map(|(_, h)| h.clone())
            .collect();

        let mut rows: Vec<f64> = Vec::new();
        let mut target_vals: Vec<f64> = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record?;
            let row_no = row_idx + 1;
            if record.len() != headers.len() {
                return Err(Error::data(format!(
                    "row {row_no}: expected {} cells, found {}",
                    headers.len(),
                    record.len()
                )));
            }
            for (col, cell) in record.iter().enumerate() {
                let cell = cell.trim();
                if cell.is_empty() {
                    return Err(Error::data(format!(
                        "row {row_no}: missing value in column '{}'",
                        headers[col]
                    )));
                }
                let value: f64 = cell.parse().map_err(|_| {
                    Error::data(format!(
                        "row {row_no}: cannot parse '{cell}' in column '{}'",
                        headers[col]
                    ))
                })?;
                if col == target_col {
                    target_vals.push(value);
                } else {
                    rows.push(value);
                }
            }
        }
        let n = target_vals.len();
        let p = feature_names.len();
        let features = Array2::from_shape_vec((n, p), rows)
            .map_err(|e| Error::data(format!("csv shape error: {e}")))?;
        Dataset::new(features, feature_names, Array1::from(target_vals))
    }
}

/// Named groups of feature indices. Groups may overlap; each is non-empty,
/// sorted, and deduplicated. Iteration follows insertion order.
#[derive(Debug, Clone)]
pub struct GroupSpec {
    groups: IndexMap<String, Vec<usize>>,
}

#[derive(Deserialize)]
struct GroupSpecFile {
    groups: IndexMap<String, Vec<String>>,
}

impl GroupSpec {
    pub fn new(groups: IndexMap<String, Vec<usize>>, p: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::data("group spec contains no groups"));
        }
        let mut normalized = IndexMap::new();
        for (name, mut idx) in groups {
            if idx.is_empty() {
                return Err(Error::data(format!("group '{name}' is empty")));
            }
            idx.sort_unstable();
            idx.dedup();
            if let Some(&bad) = idx.iter().find(|&&i| i >= p) {
                return Err(Error::data(format!(
                    "group '{name}' references feature index {bad} but p = {p}"
                )));
            }
            normalized.insert(name, idx);
        }
        Ok(GroupSpec { groups: normalized })
    }

    /// Builds from `{"groups": {"name": ["feat_a", ...]}}` JSON, resolving
    /// feature names against `data`.
    pub fn from_json_str(json: &str, data: &Dataset) -> Result<Self> {
        let file: GroupSpecFile =
            serde_json::from_str(json).map_err(|e| Error::data(format!("group spec: {e}")))?;
        let mut groups = IndexMap::new();
        for (name, features) in file.groups {
            let mut idx = Vec::with_capacity(features.len());
            for feat in &features {
                let i = data.feature_index(feat).ok_or_else(|| {
                    Error::data(format!("group '{name}': unknown feature '{feat}'"))
                })?;
                idx.push(i);
            }
            groups.insert(name, idx);
        }
        GroupSpec::new(groups, data.p())
    }

    pub fn from_json_file(path: impl AsRef<Path>, data: &Dataset) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        GroupSpec::from_json_str(&text, data)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.groups.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[usize]> {
        self.groups.get(name).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Sorted, deduplicated union of the named groups' indices.
    pub fn union_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = Vec::new();
        for name in names {
            let idx = self
                .get(name)
                .ok_or_else(|| Error::contract(format!("unknown group '{name}'")))?;
            out.extend_from_slice(idx);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Union of every group in the spec.
    pub fn union_all(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.groups.values().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Serializes back to the external JSON shape using feature names.
    pub fn to_json(&self, feature_names: &[String]) -> serde_json::Value {
        let mut groups = serde_json::Map::new();
        for (name, idx) in &self.groups {
            let feats: Vec<serde_json::Value> = idx
                .iter()
                .map(|&i| serde_json::Value::String(feature_names[i].clone()))
                .collect();
            groups.insert(name.clone(), serde_json::Value::Array(feats));
        }
        serde_json::json!({ "groups": groups })
    }
}
