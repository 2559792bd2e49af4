//! Importance report shared by the permutation and refitting estimators,
//! with CSV (`group,method,mean,sd`) and full-detail JSON serialization.

use crate::error::Result;
use crate::linalg::mean_sd;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupScore {
    pub group: String,
    pub mean: f64,
    pub sd: f64,
    pub per_fold: Vec<f64>,
}

impl GroupScore {
    pub fn from_folds(group: impl Into<String>, per_fold: Vec<f64>) -> Self {
        let (mean, sd) = mean_sd(&per_fold);
        GroupScore { group: group.into(), mean, sd, per_fold }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: String,
    pub loss: String,
    pub seed: u64,
    /// Permutation repetitions, when the method permutes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    /// `sd` is the sample standard deviation over folds (n−1 denominator).
    pub sd_kind: String,
    pub entries: Vec<GroupScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

impl ImportanceReport {
    pub fn new(method: impl Into<String>, loss: impl Into<String>, seed: u64) -> Self {
        ImportanceReport {
            method: method.into(),
            loss: loss.into(),
            seed,
            permutations: None,
            sd_kind: "fold-sd".into(),
            entries: Vec::new(),
            manifest_hash: None,
        }
    }

    pub fn get(&self, group: &str) -> Option<&GroupScore> {
        self.entries.iter().find(|e| e.group == group)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("group,method,mean,sd\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.group, self.method, e.mean, e.sd));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema_one_row_per_group() {
        let mut report = ImportanceReport::new("gpfi", "mse", 7);
        report.entries.push(GroupScore::from_folds("G1", vec![1.0, 3.0]));
        report.entries.push(GroupScore::from_folds("G2", vec![0.5]));
        let csv = report.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "group,method,mean,sd");
        assert!(lines[1].starts_with("G1,gpfi,2,"));
        assert_eq!(lines.len(), 3);
        // single fold → sd 0
        assert_eq!(report.entries[1].sd, 0.0);
    }
}
