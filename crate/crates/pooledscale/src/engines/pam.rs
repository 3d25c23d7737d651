//! Partitioning around medoids (BUILD + SWAP), deterministic.
//!
//! The classic greedy BUILD seeds the medoid set, then SWAP applies the
//! single best strict-improvement exchange until none remains. With fixed
//! tie breaking the algorithm has no random component; the seed argument is
//! accepted only so every engine shares one calling convention.

use ndarray::Array2;

use super::{pairwise_distances, Metric, Partition};
use crate::error::{Error, Result};

pub fn pam(data: &Array2<f64>, k: usize, metric: Metric, seed: u64) -> Result<Partition> {
    pam_with_cost(data, k, metric, seed).map(|(partition, _)| partition)
}

/// Same as [`pam`] but also returns the total distance of points to their
/// medoids, which is the objective the search minimises.
pub fn pam_with_cost(
    data: &Array2<f64>,
    k: usize,
    metric: Metric,
    _seed: u64,
) -> Result<(Partition, f64)> {
    let n = data.nrows();
    if n == 0 {
        return Err(Error::invalid_data("empty dataset"));
    }
    if k < 1 || k > n {
        return Err(Error::invalid_argument(format!(
            "cluster count must satisfy 1 <= k <= n (got k = {k}, n = {n})"
        )));
    }
    let dist = pairwise_distances(data, metric);

    // BUILD: start from the point with minimum total distance, then add the
    // candidate with the largest aggregate cost reduction. Ties pick the
    // lowest index.
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    let first = (0..n)
        .min_by(|&a, &b| {
            let ta: f64 = (0..n).map(|j| dist.get(a, j)).sum();
            let tb: f64 = (0..n).map(|j| dist.get(b, j)).sum();
            ta.total_cmp(&tb)
        })
        .unwrap();
    selected.push(first);
    is_medoid[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|j| dist.get(j, first)).collect();

    while selected.len() < k {
        let mut best_gain = f64::NEG_INFINITY;
        let mut best_c = 0;
        for c in 0..n {
            if is_medoid[c] {
                continue;
            }
            let gain: f64 = (0..n)
                .map(|j| (nearest[j] - dist.get(j, c)).max(0.0))
                .sum();
            if gain > best_gain {
                best_gain = gain;
                best_c = c;
            }
        }
        selected.push(best_c);
        is_medoid[best_c] = true;
        for j in 0..n {
            nearest[j] = nearest[j].min(dist.get(j, best_c));
        }
    }

    // SWAP: repeatedly apply the exchange with the most negative cost delta.
    // Scan order (medoid slot, then candidate index) fixes ties.
    loop {
        let (d1, d2) = nearest_two(&dist, &selected, n);
        let mut best_delta = 0.0;
        let mut best_swap: Option<(usize, usize)> = None;
        for (slot, &m) in selected.iter().enumerate() {
            for h in 0..n {
                if is_medoid[h] {
                    continue;
                }
                let mut delta = 0.0;
                for j in 0..n {
                    let d_jm = dist.get(j, m);
                    let d_jh = dist.get(j, h);
                    if d_jm > d1[j] {
                        delta += d_jh.min(d1[j]) - d1[j];
                    } else {
                        delta += d_jh.min(d2[j]) - d1[j];
                    }
                }
                if delta < best_delta {
                    best_delta = delta;
                    best_swap = Some((slot, h));
                }
            }
        }
        match best_swap {
            Some((slot, h)) => {
                is_medoid[selected[slot]] = false;
                is_medoid[h] = true;
                selected[slot] = h;
            }
            None => break,
        }
    }

    // Cluster ids follow medoid index order; assignment ties go to the
    // lowest-index medoid.
    selected.sort_unstable();
    let mut labels = Vec::with_capacity(n);
    let mut cost = 0.0;
    for j in 0..n {
        let mut best = 0;
        for (c, &m) in selected.iter().enumerate() {
            if dist.get(j, m) < dist.get(j, selected[best]) {
                best = c;
            }
        }
        cost += dist.get(j, selected[best]);
        labels.push(best);
    }
    Ok((Partition::new(labels, k)?, cost))
}

fn nearest_two(dist: &super::DistMatrix, selected: &[usize], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d1 = vec![f64::INFINITY; n];
    let mut d2 = vec![f64::INFINITY; n];
    for j in 0..n {
        for &m in selected {
            let d = dist.get(j, m);
            if d < d1[j] {
                d2[j] = d1[j];
                d1[j] = d;
            } else if d < d2[j] {
                d2[j] = d;
            }
        }
    }
    (d1, d2)
}
