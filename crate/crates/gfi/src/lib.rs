//! Grouped feature importance and combined feature effects for regression
//! models.
//!
//! The crate quantifies how much user-defined feature groups contribute to a
//! model's predictive performance and visualizes grouped effects:
//!
//! - **Permutation scores** ([`perm`]): PFI, grouped GPFI, and group-only
//!   GOPFI, with Monte-Carlo permutation estimators and optional
//!   resampling embedding.
//! - **Refitting scores** ([`refit`]): LOGO (drop the group, refit) and LOGI
//!   (group alone against the mean-predicting null model).
//! - **Shapley scores** ([`shapley`]): exact and sampled grouped Shapley
//!   importance over a pluggable coalition value function, plus per-feature
//!   decomposition and the interaction remainder.
//! - **Sequential selection** ([`sequential`]): greedy forward search over
//!   groups by LOGI improvement, repeated over data splits and aggregated
//!   into alluvial flow charts.
//! - **Dimension reduction** ([`dimred`]): HSIC-based sparse supervised PCA
//!   solved by penalized matrix decomposition.
//! - **Effect plots** ([`cfep`]): combined features effect plots on sparse
//!   linear projections, a PCA-grid baseline, and trend aggregation.
//! - **Scenario generators** ([`simgen`]): seeded synthetic designs used by
//!   the test-suites and the `simulate` CLI command.
//!
//! See the crate `examples/` directory for one runnable walkthrough per
//! capability, and the `gfi` binary for the file-based CLI.

pub mod cfep;
pub mod config;
pub mod data;
pub mod dimred;
pub mod error;
pub mod learners;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod perm;
pub mod refit;
pub mod report;
pub mod resampling;
pub mod run;
pub mod seed;
pub mod sequential;
pub mod shapley;
pub mod simgen;
mod svg;

pub use data::{Dataset, GroupSpec};
pub use error::{Error, Result};
pub use loss::Loss;
pub use model::{Learner, Model};
pub use resampling::ResamplingPlan;
