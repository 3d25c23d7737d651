//! Lloyd k-means with multi-start.
//!
//! Each start samples k distinct rows as initial centers, runs Lloyd
//! iterations to convergence or `max_iters`, and repairs empty clusters by
//! promoting the point farthest from its assigned center. The best start by
//! within-cluster sum of squares wins; ties keep the earliest start, so the
//! result is deterministic for a given seed regardless of how starts are
//! scheduled.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::Partition;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::rng::stream_rng;

/// Outcome of a single Lloyd run.
#[derive(Debug, Clone)]
pub struct KmeansRun {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub wcss: f64,
    /// WCSS after each iteration's update step; non-increasing.
    pub wcss_trace: Vec<f64>,
}

/// Best-of-`starts` Lloyd k-means. Start `s` draws from RNG substream `s`.
pub fn kmeans_multi(
    data: &Array2<f64>,
    k: usize,
    starts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Partition> {
    let run = kmeans_multi_run(data, k, starts, max_iters, seed)?;
    Partition::new(run.labels, k)
}

/// As [`kmeans_multi`], returning the full winning run.
pub fn kmeans_multi_run(
    data: &Array2<f64>,
    k: usize,
    starts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KmeansRun> {
    let n = data.nrows();
    if k < 1 || k > n {
        return Err(Error::invalid_argument(format!(
            "k must satisfy 1 <= k <= n (got k = {k}, n = {n})"
        )));
    }
    if starts < 1 || max_iters < 1 {
        return Err(Error::invalid_argument("starts and max_iters must be positive"));
    }
    let runs: Vec<KmeansRun> = map_indexed(starts, |s| {
        let mut rng = stream_rng(seed, s as u64);
        kmeans_single(data, k, max_iters, &mut rng)
    });
    // reduce in start order; strict < keeps the earliest minimizer
    let mut best: Option<KmeansRun> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// One Lloyd run from a caller-supplied RNG (initial centers are k distinct
/// rows sampled uniformly).
pub fn kmeans_single(data: &Array2<f64>, k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> KmeansRun {
    let (n, p) = data.dim();
    debug_assert!(k >= 1 && k <= n);

    let picks = rand::seq::index::sample(rng, n, k);
    let mut centers = Array2::zeros((k, p));
    for (c, row) in picks.iter().enumerate() {
        centers.row_mut(c).assign(&data.row(row));
    }

    let mut labels = vec![0usize; n];
    let mut wcss_trace = Vec::new();
    for _ in 0..max_iters {
        let previous = labels.clone();

        // assignment: nearest center by squared distance, lowest id on ties
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            let mut best_c = 0;
            for c in 0..k {
                let d = sq_dist(data, i, &centers, c);
                if d < best {
                    best = d;
                    best_c = c;
                }
            }
            *label = best_c;
        }

        // empty-cluster repair: hand each empty cluster the point farthest
        // from its current center (strictly decreases WCSS)
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let mut far = 0;
            let mut far_d = -1.0;
            for i in 0..n {
                let d = sq_dist(data, i, &centers, labels[i]);
                if d > far_d && counts[labels[i]] > 1 {
                    far_d = d;
                    far = i;
                }
            }
            labels[far] = empty;
        }

        // update: centers become cluster means
        centers.fill(0.0);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for c in 0..p {
                centers[[l, c]] += data[[i, c]];
            }
        }
        for l in 0..k {
            let cnt = counts[l] as f64;
            for c in 0..p {
                centers[[l, c]] /= cnt;
            }
        }

        let wcss: f64 = (0..n).map(|i| sq_dist(data, i, &centers, labels[i])).sum();
        wcss_trace.push(wcss);

        if labels == previous {
            break;
        }
    }

    let wcss = *wcss_trace.last().unwrap();
    KmeansRun {
        labels,
        centers,
        wcss,
        wcss_trace,
    }
}

#[inline]
fn sq_dist(data: &Array2<f64>, i: usize, centers: &Array2<f64>, c: usize) -> f64 {
    let p = data.ncols();
    let mut acc = 0.0;
    for col in 0..p {
        let d = data[[i, col]] - centers[[c, col]];
        acc += d * d;
    }
    acc
}
