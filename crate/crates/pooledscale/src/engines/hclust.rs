//! Agglomerative hierarchical clustering via Lance-Williams updates.
//!
//! Merge records use the common numbering: leaves are 0..n−1 and the cluster
//! created by merge step i is node n+i. Ward operates on squared Euclidean
//! distances and reports heights on the WCSS-increase scale (the
//! Lance-Williams value halved); the other linkages report plain distances.
//! All four linkages are reducible, so merge heights never invert.

use serde::{Deserialize, Serialize};

use super::{DistMatrix, Metric, Partition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Average,
    Complete,
    Ward,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Ward => "ward",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_count: usize,
}

/// Agglomerate a distance matrix. Ties break toward the smallest active
/// slot pair, so the tree is deterministic.
pub fn hclust(dist: &DistMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dist.n;
    if n == 0 {
        return Err(Error::invalid_argument("empty distance matrix"));
    }
    if linkage == Linkage::Ward && dist.metric != Metric::Euclidean {
        return Err(Error::invalid_argument(
            "ward linkage is defined on euclidean distances",
        ));
    }

    // full working matrix, squared for ward
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = dist.get(i, j);
            d[i * n + j] = if linkage == Linkage::Ward { v * v } else { v };
        }
    }

    struct Slot {
        node: usize,
        size: usize,
    }
    let mut slots: Vec<Option<Slot>> = (0..n).map(|i| Some(Slot { node: i, size: 1 })).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best = f64::INFINITY;
        let mut pair = (0usize, 0usize);
        for i in 0..n {
            if slots[i].is_none() {
                continue;
            }
            for j in (i + 1)..n {
                if slots[j].is_none() {
                    continue;
                }
                let v = d[i * n + j];
                if v < best {
                    best = v;
                    pair = (i, j);
                }
            }
        }
        let (i, j) = pair;
        let (si, sj) = (slots[i].as_ref().unwrap().size, slots[j].as_ref().unwrap().size);
        let (node_i, node_j) = (slots[i].as_ref().unwrap().node, slots[j].as_ref().unwrap().node);

        let d_ij = d[i * n + j];
        for h in 0..n {
            if h == i || h == j || slots[h].is_none() {
                continue;
            }
            let sh = slots[h].as_ref().unwrap().size;
            let (d_hi, d_hj) = (d[h * n + i], d[h * n + j]);
            let updated = match linkage {
                Linkage::Single => d_hi.min(d_hj),
                Linkage::Complete => d_hi.max(d_hj),
                Linkage::Average => {
                    (si as f64 * d_hi + sj as f64 * d_hj) / (si + sj) as f64
                }
                Linkage::Ward => {
                    ((si + sh) as f64 * d_hi + (sj + sh) as f64 * d_hj - sh as f64 * d_ij)
                        / (si + sj + sh) as f64
                }
            };
            d[h * n + i] = updated;
            d[i * n + h] = updated;
        }

        merges.push(Merge {
            left: node_i.min(node_j),
            right: node_i.max(node_j),
            height: if linkage == Linkage::Ward { best / 2.0 } else { best },
        });
        slots[i] = Some(Slot {
            node: n + step,
            size: si + sj,
        });
        slots[j] = None;
    }

    Ok(Dendrogram {
        merges,
        leaf_count: n,
    })
}

/// Partition from undoing the last k−1 merges. Cluster ids follow the order
/// of each cluster's smallest leaf.
pub fn cut_dendrogram(dendrogram: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dendrogram.leaf_count;
    if k < 1 || k > n {
        return Err(Error::invalid_argument(format!(
            "cut level must satisfy 1 <= k <= n (got k = {k}, n = {n})"
        )));
    }
    let applied = n - k;
    let mut parent: Vec<usize> = (0..n + applied).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (t, merge) in dendrogram.merges.iter().take(applied).enumerate() {
        let a = find(&mut parent, merge.left);
        let b = find(&mut parent, merge.right);
        parent[b] = a;
        parent[n + t] = a;
    }
    let mut cluster_of_root = std::collections::HashMap::new();
    let mut labels = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let next = cluster_of_root.len();
        let id = *cluster_of_root.entry(root).or_insert(next);
        labels.push(id);
    }
    Partition::new(labels, k)
}
