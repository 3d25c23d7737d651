//! Pooled variable scaling for cluster analysis.
//!
//! Standardising every variable by its standard deviation (or range, or
//! mean absolute deviation) treats between-cluster separation as if it were
//! noise: a variable that splits into well-separated groups gets shrunk the
//! most, exactly the wrong direction for clustering. The pooled scale
//! estimators here first partition each variable with an exact univariate
//! dynamic program, pick the number of groups with a gap statistic against
//! a shared uniform reference, and then measure spread within the selected
//! groups only. Scaling by that pooled value preserves between-cluster
//! structure while still equalising within-cluster spread across variables.
//!
//! The crate provides the full evaluation pipeline around the estimators:
//!
//! * [`solver1d`]: exact 1-d k-means and k-medians over a whole path of k.
//! * [`gap`]: bootstrap gap references, gap and jump selection rules.
//! * [`scaling`]: the six scaling methods and per-variable decisions.
//! * [`engines`]: k-means, four hierarchical linkages, and PAM.
//! * [`evaluation`]: adjusted Rand index and the best-ARI-over-k protocol.
//! * [`simgen`]: the factorial simulation design and its runner.
//! * [`dataset`]: delimited input and output plumbing.
//!
//! Heavy loops (bootstrap replicates, k-means starts, columns, simulation
//! jobs) run on a rayon pool when the default `parallel` feature is on; the
//! same code paths execute sequentially without it and produce identical
//! results.

pub mod dataset;
pub mod engines;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod gap;
pub mod rng;
pub mod scaling;
pub mod simgen;
pub mod solver1d;

pub use error::{Error, Result};

pub use engines::{Engine, Linkage, Metric, Partition};
pub use evaluation::{adjusted_rand_index, best_ari_over_k};
pub use gap::{build_reference, gap_curve, select_k_gap, select_k_jump, GapReference};
pub use scaling::{
    classic_scale, pooled_scale_variable, scale_dataset, scale_ratios, variable_gap_curve, Method,
    ScaleConfig, ScaleDecision, ScaleReport,
};
pub use simgen::{make_dataset, run_design, SimConfig};
pub use solver1d::{solve_kmeans_1d, solve_kmedians_1d, solve_path, Criterion, UnivariateSolution};
