//! Run configuration: one JSON file (plus CLI flag overrides) drives every
//! command. Unknown keys are rejected, referenced paths are checked at parse
//! time, and the fully resolved config (all defaults filled in) is written
//! back into the run manifest so any run can be reproduced from its outputs.

use crate::dimred::{CBudget, Kernel};
use crate::error::{Error, Result};
use crate::learners::{ForestLearner, LinearLearner, LookupLearner, NullLearner};
use crate::loss::Loss;
use crate::model::Learner;
use crate::resampling::ResamplingPlan;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LearnerConfig {
    Null,
    Linear {
        #[serde(default)]
        lambda: f64,
    },
    Forest {
        #[serde(default = "default_trees")]
        trees: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_feature_fraction")]
        feature_fraction: f64,
    },
    /// Exact-match prediction table on the listed columns (stub hook for
    /// wiring hand-built prediction tables through the pipelines).
    Lookup { match_features: Vec<String> },
}

fn default_trees() -> usize {
    300
}

fn default_min_leaf() -> usize {
    5
}

fn default_feature_fraction() -> f64 {
    1.0 / 3.0
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::Forest {
            trees: default_trees(),
            min_leaf: default_min_leaf(),
            max_depth: None,
            feature_fraction: default_feature_fraction(),
        }
    }
}

impl LearnerConfig {
    /// Builds the learner; forest seeds derive from the master seed.
    pub fn build(&self, master_seed: u64) -> Box<dyn Learner> {
        match self {
            LearnerConfig::Null => Box::new(NullLearner),
            LearnerConfig::Linear { lambda } => Box::new(LinearLearner::new(*lambda)),
            LearnerConfig::Forest { trees, min_leaf, max_depth, feature_fraction } => {
                Box::new(ForestLearner {
                    trees: *trees,
                    min_leaf: *min_leaf,
                    max_depth: *max_depth,
                    feature_fraction: *feature_fraction,
                    seed: crate::seed::child_seed(master_seed, "learner", 0),
                })
            }
            LearnerConfig::Lookup { match_features } => Box::new(LookupLearner {
                match_features: match_features.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ResamplingConfig {
    Kfold {
        #[serde(default = "default_k")]
        k: usize,
    },
    Subsampling {
        repetitions: usize,
        train_fraction: f64,
    },
    Bootstrap { repetitions: usize },
}

fn default_k() -> usize {
    10
}

impl Default for ResamplingConfig {
    fn default() -> Self {
        ResamplingConfig::Kfold { k: default_k() }
    }
}

impl ResamplingConfig {
    pub fn to_plan(&self, seed: u64) -> ResamplingPlan {
        match *self {
            ResamplingConfig::Kfold { k } => ResamplingPlan::KFold { k, seed },
            ResamplingConfig::Subsampling { repetitions, train_fraction } => {
                ResamplingPlan::Subsampling { repetitions, train_fraction, seed }
            }
            ResamplingConfig::Bootstrap { repetitions } => {
                ResamplingPlan::Bootstrap { repetitions, seed }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PermutationConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub normalize: bool,
}

fn default_m() -> usize {
    50
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig { m: default_m(), normalize: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShapleyConfig {
    /// "exact" or "sampled".
    #[serde(default = "default_shap_mode")]
    pub mode: String,
    /// Orderings for sampled mode.
    #[serde(default = "default_orderings")]
    pub m: usize,
    /// "perm" (GOPFI) or "refit" (LOGI).
    #[serde(default = "default_value_function")]
    pub value_function: String,
    /// Also compute per-feature scores and remainders.
    #[serde(default)]
    pub with_features: bool,
}

fn default_shap_mode() -> String {
    "exact".into()
}

fn default_orderings() -> usize {
    2000
}

fn default_value_function() -> String {
    "perm".into()
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        ShapleyConfig {
            mode: default_shap_mode(),
            m: default_orderings(),
            value_function: default_value_function(),
            with_features: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SequentialSettings {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_k")]
    pub inner_k: usize,
    /// Streams with fewer supporting splits are dropped from the chart.
    #[serde(default = "default_min_stream")]
    pub min_stream: usize,
}

fn default_delta() -> f64 {
    0.001
}

fn default_reps() -> usize {
    100
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_min_stream() -> usize {
    5
}

impl Default for SequentialSettings {
    fn default() -> Self {
        SequentialSettings {
            delta: default_delta(),
            repetitions: default_reps(),
            train_fraction: default_train_fraction(),
            inner_k: default_k(),
            min_stream: default_min_stream(),
        }
    }
}

/// ℓ₁ budget: a number or the string "cv".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CValue {
    Fixed(f64),
    Mode(String),
}

impl Default for CValue {
    fn default() -> Self {
        CValue::Mode("cv".into())
    }
}

impl CValue {
    pub fn to_budget(&self) -> Result<CBudget> {
        match self {
            CValue::Fixed(c) => Ok(CBudget::Fixed(*c)),
            CValue::Mode(s) if s == "cv" => Ok(CBudget::Cv),
            CValue::Mode(s) => Err(Error::config(format!(
                "dimred.c must be a number or \"cv\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DimredConfig {
    /// Group whose effect is plotted (cfep command).
    #[serde(default)]
    pub group: Option<String>,
    /// "rbf", "linear", or "identity".
    #[serde(default = "default_kernel")]
    pub kernel: String,
    /// 2σ² for the RBF kernel; omitted → median heuristic.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub c: CValue,
    #[serde(default = "default_trend_degree")]
    pub trend_degree: usize,
}

fn default_kernel() -> String {
    "rbf".into()
}

fn default_rank() -> usize {
    1
}

fn default_trend_degree() -> usize {
    1
}

impl Default for DimredConfig {
    fn default() -> Self {
        DimredConfig {
            group: None,
            kernel: default_kernel(),
            bandwidth: None,
            rank: default_rank(),
            c: CValue::default(),
            trend_degree: default_trend_degree(),
        }
    }
}

impl DimredConfig {
    pub fn to_kernel(&self) -> Result<Kernel> {
        match self.kernel.as_str() {
            "rbf" => Ok(Kernel::Rbf { bandwidth: self.bandwidth }),
            "linear" => Ok(Kernel::Linear),
            "identity" => Ok(Kernel::Identity),
            other => Err(Error::config(format!(
                "dimred.kernel must be rbf, linear, or identity, got \"{other}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    pub target: String,
    #[serde(default)]
    pub groups: Option<PathBuf>,
    #[serde(default)]
    pub learner: LearnerConfig,
    /// Importance method: gpfi | gopfi | logo | logi | gsi.
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub loss: Loss,
    #[serde(default)]
    pub resampling: ResamplingConfig,
    #[serde(default)]
    pub permutation: PermutationConfig,
    #[serde(default)]
    pub shapley: ShapleyConfig,
    #[serde(default)]
    pub sequential: SequentialSettings,
    #[serde(default)]
    pub dimred: DimredConfig,
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Optional SVG output path override.
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    /// Parses a config file; a run manifest (`{"command", "config", ...}`)
    /// is unwrapped transparently so any manifest reruns its command.
    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config JSON: {e}")))?;
        let config_value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(config_value).map_err(|e| Error::config(format!("config: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.as_ref().display()))
        })?;
        RunConfig::from_json_str(&text)
    }

    /// Referenced input paths must exist.
    pub fn validate_paths(&self) -> Result<()> {
        if !self.data.exists() {
            return Err(Error::config(format!(
                "data file does not exist: {}",
                self.data.display()
            )));
        }
        if let Some(groups) = &self.groups {
            if !groups.exists() {
                return Err(Error::config(format!(
                    "group spec does not exist: {}",
                    groups.display()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Run manifest written next to every command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn for_config(command: &str, config: &RunConfig) -> Result<Manifest> {
        Ok(Manifest {
            command: command.to_string(),
            version: format!("gfi {}", env!("CARGO_PKG_VERSION")),
            config_hash: config.hash(),
            config: serde_json::to_value(config)?,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}
