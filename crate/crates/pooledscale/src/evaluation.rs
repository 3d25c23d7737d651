//! Partition agreement scoring.
//!
//! The adjusted Rand index follows the Hubert-Arabie permutation model:
//! (Index − Expected) / (Max − Expected) over the pair-count contingency
//! table. A zero denominator only occurs when both partitions are all
//! singletons or both are one block, i.e. the partitions are identical, so
//! that case scores 1.

use ndarray::Array2;

use crate::engines::{
    cut_dendrogram, hclust, kmeans_multi, pairwise_distances, pam, Engine, Metric, Partition,
};
use crate::error::{Error, Result};
use crate::rng::mix;

#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn from_partitions(a: &Partition, b: &Partition) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::invalid_argument(format!(
                "partition lengths differ ({} vs {})",
                a.n(),
                b.n()
            )));
        }
        let mut counts = vec![vec![0u64; b.k]; a.k];
        for (&la, &lb) in a.labels.iter().zip(&b.labels) {
            counts[la][lb] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..b.k)
            .map(|j| counts.iter().map(|row| row[j]).sum())
            .collect();
        let n = row_sums.iter().sum();
        Ok(ContingencyTable {
            counts,
            row_sums,
            col_sums,
            n,
        })
    }
}

pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::from_partitions(a, b)?;
    // exact in f64 for any feasible n: all terms are halves of products of
    // counts below 2^53
    let choose2 = |x: u64| x as f64 * (x as f64 - 1.0) / 2.0;
    let index: f64 = table
        .counts
        .iter()
        .flatten()
        .map(|&c| choose2(c))
        .sum();
    let sum_a: f64 = table.row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max - expected == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Run an engine at every k from 1 to min(3·k_true, n) and keep the best
/// agreement with the reference labels. Hierarchical engines build the tree
/// once and cut it per level; the randomised engines get a distinct seed per
/// level. Ties keep the smallest k.
pub fn best_ari_over_k(
    data: &Array2<f64>,
    truth: &Partition,
    engine: &Engine,
    seed: u64,
) -> Result<(f64, usize)> {
    let n = data.nrows();
    if truth.n() != n {
        return Err(Error::invalid_argument(format!(
            "labels cover {} rows but data has {n}",
            truth.n()
        )));
    }
    if n == 0 {
        return Err(Error::invalid_data("empty dataset"));
    }
    let kmax = (3 * truth.k).min(n).max(1);

    let dendrogram = match engine {
        Engine::Hc(linkage) => {
            let dist = pairwise_distances(data, Metric::Euclidean);
            Some(hclust(&dist, *linkage)?)
        }
        _ => None,
    };

    let mut best_ari = f64::NEG_INFINITY;
    let mut best_k = 1;
    for k in 1..=kmax {
        let partition = match engine {
            Engine::Kmeans { starts, max_iters } => {
                kmeans_multi(data, k, *starts, *max_iters, mix(seed, k as u64))?
            }
            Engine::Pam => pam(data, k, Metric::Manhattan, mix(seed, k as u64))?,
            Engine::Hc(_) => cut_dendrogram(dendrogram.as_ref().unwrap(), k)?,
        };
        let ari = adjusted_rand_index(&partition, truth)?;
        if ari > best_ari {
            best_ari = ari;
            best_k = k;
        }
    }
    Ok((best_ari, best_k))
}
