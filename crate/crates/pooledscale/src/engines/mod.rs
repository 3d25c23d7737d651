//! Multivariate clustering engines used to evaluate scalers: Lloyd k-means
//! with multi-start, agglomerative hierarchical clustering with four
//! linkages, and partitioning around medoids on Manhattan distances.

mod distance;
mod hclust;
mod kmeans;
mod pam;

pub use distance::{pairwise_distances, DistMatrix, Metric};
pub use hclust::{cut_dendrogram, hclust, Dendrogram, Linkage, Merge};
pub use kmeans::{kmeans_multi, kmeans_multi_run, kmeans_single, KmeansRun};
pub use pam::{pam, pam_with_cost};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster assignment of n observations; labels are 0-based ids below `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid_argument("k must be positive"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid_argument(format!(
                "label {bad} out of range for k = {k}"
            )));
        }
        Ok(Partition { labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Renumber labels so that every id below `k` is represented, preserving
    /// the order of first appearance.
    pub fn compact(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let mut labels = Vec::with_capacity(self.labels.len());
        for &l in &self.labels {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            labels.push(map[l]);
        }
        Partition {
            labels,
            k: next.max(1),
        }
    }
}

/// One of the six evaluation engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Engine {
    Kmeans { starts: usize, max_iters: usize },
    Pam,
    Hc(Linkage),
}

impl Engine {
    pub const DEFAULT_STARTS: usize = 100;
    pub const DEFAULT_MAX_ITERS: usize = 100;

    pub fn kmeans_default() -> Engine {
        Engine::Kmeans {
            starts: Self::DEFAULT_STARTS,
            max_iters: Self::DEFAULT_MAX_ITERS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Kmeans { .. } => "kmeans",
            Engine::Pam => "pam",
            Engine::Hc(Linkage::Single) => "hc-single",
            Engine::Hc(Linkage::Average) => "hc-average",
            Engine::Hc(Linkage::Complete) => "hc-complete",
            Engine::Hc(Linkage::Ward) => "hc-ward",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Engine::kmeans_default()),
            "pam" => Ok(Engine::Pam),
            "hc-single" => Ok(Engine::Hc(Linkage::Single)),
            "hc-average" => Ok(Engine::Hc(Linkage::Average)),
            "hc-complete" => Ok(Engine::Hc(Linkage::Complete)),
            "hc-ward" => Ok(Engine::Hc(Linkage::Ward)),
            other => Err(Error::invalid_argument(format!(
                "unknown engine {other:?}; expected kmeans, pam, hc-single, hc-average, hc-complete, or hc-ward"
            ))),
        }
    }
}

/// Run an engine for a single target k.
pub fn run_engine(data: &Array2<f64>, engine: Engine, k: usize, seed: u64) -> Result<Partition> {
    match engine {
        Engine::Kmeans { starts, max_iters } => kmeans_multi(data, k, starts, max_iters, seed),
        Engine::Pam => pam(data, k, Metric::Manhattan, seed),
        Engine::Hc(linkage) => {
            let dist = pairwise_distances(data, Metric::Euclidean);
            cut_dendrogram(&hclust(&dist, linkage)?, k)
        }
    }
}
