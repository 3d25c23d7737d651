//! Exact univariate k-means and k-medians via dynamic programming.
//!
//! Optimal 1-D clusters are intervals of the sorted sample, so the global
//! optimum is found by a DP over split positions in O(k·n²) using O(1)
//! interval costs from prefix sums. The squared-loss objective is
//!
//! S_k = sqrt((1/n)·Σᵢ d₂ᵢ),   d₂ᵢ = (xᵢ − mean of its cluster)²,
//!
//! and the absolute-loss objective is M_k = (1/n)·Σᵢ |xᵢ − median of its
//! cluster|. Both are global minima over all k-cluster partitions, not local
//! optima of a heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss family of a univariate solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Squared loss; centers are means, objective is S_k.
    Squared,
    /// Absolute loss; centers are lower medians, objective is M_k.
    Absolute,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::Squared => write!(f, "squared"),
            Criterion::Absolute => write!(f, "absolute"),
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(Criterion::Squared),
            "absolute" => Ok(Criterion::Absolute),
            other => Err(Error::invalid_argument(format!(
                "unknown criterion {other:?}; expected squared or absolute"
            ))),
        }
    }
}

/// A column sorted ascending plus the permutation back to input order:
/// `perm[pos]` is the original index of the value at sorted position `pos`.
#[derive(Debug, Clone)]
pub struct SortedSample {
    pub sorted: Vec<f64>,
    pub perm: Vec<usize>,
}

impl SortedSample {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_argument("need at least one value"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_data(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        let mut perm: Vec<usize> = (0..values.len()).collect();
        perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted = perm.iter().map(|&i| values[i]).collect();
        Ok(SortedSample { sorted, perm })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn distinct_count(&self) -> usize {
        if self.sorted.is_empty() {
            return 0;
        }
        1 + self.sorted.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Globally optimal partition of a sorted sample into `k` interval clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSolution {
    pub k: usize,
    /// k−1 split positions: cluster j spans sorted indices
    /// `[boundaries[j−1], boundaries[j])` with sentinels 0 and n.
    pub boundaries: Vec<usize>,
    /// Cluster means (squared) or lower medians (absolute), ascending.
    pub centers: Vec<f64>,
    /// S_k (squared) or M_k (absolute); both use the 1/n population form.
    pub objective: f64,
    pub criterion: Criterion,
}

impl UnivariateSolution {
    /// Cluster id of each sorted position, 0-based.
    pub fn labels_sorted(&self, n: usize) -> Vec<usize> {
        let mut labels = vec![0usize; n];
        let mut cluster = 0;
        for (pos, label) in labels.iter_mut().enumerate() {
            while cluster < self.boundaries.len() && pos >= self.boundaries[cluster] {
                cluster += 1;
            }
            *label = cluster;
        }
        labels
    }

    /// Cluster id of each observation in the caller's input order.
    pub fn labels(&self, sample: &SortedSample) -> Vec<usize> {
        let by_pos = self.labels_sorted(sample.n());
        let mut labels = vec![0usize; sample.n()];
        for (pos, &orig) in sample.perm.iter().enumerate() {
            labels[orig] = by_pos[pos];
        }
        labels
    }

    /// Pooled within-cluster dispersion W_k: n·S_k² (squared) or n·M_k (absolute).
    pub fn pooled_w(&self, n: usize) -> f64 {
        match self.criterion {
            Criterion::Squared => n as f64 * self.objective * self.objective,
            Criterion::Absolute => n as f64 * self.objective,
        }
    }
}

/// Prefix-sum interval costs over a sorted sample.
///
/// Sums are taken over midrange-centered values: the costs are
/// shift-invariant, but `sq − sum²/cnt` cancels catastrophically when the
/// magnitude of the values dwarfs the within-interval spread, and centering
/// bounds the summands by the sample range. Cluster centers add the offset
/// back (squared) or report the original data value (absolute).
struct IntervalCosts<'a> {
    sorted: &'a [f64],
    centered: Vec<f64>,
    offset: f64,
    /// s1[i] = sum of the first i centered values.
    s1: Vec<f64>,
    /// s2[i] = sum of squares of the first i centered values (squared
    /// criterion only).
    s2: Vec<f64>,
    criterion: Criterion,
}

impl<'a> IntervalCosts<'a> {
    fn new(sorted: &'a [f64], criterion: Criterion) -> Self {
        let n = sorted.len();
        let offset = 0.5 * sorted[0] + 0.5 * sorted[n - 1];
        let centered: Vec<f64> = sorted.iter().map(|v| v - offset).collect();
        let mut s1 = Vec::with_capacity(n + 1);
        s1.push(0.0);
        for &v in &centered {
            s1.push(s1.last().unwrap() + v);
        }
        let s2 = match criterion {
            Criterion::Squared => {
                let mut s2 = Vec::with_capacity(n + 1);
                s2.push(0.0);
                for &v in &centered {
                    s2.push(s2.last().unwrap() + v * v);
                }
                s2
            }
            Criterion::Absolute => Vec::new(),
        };
        IntervalCosts {
            sorted,
            centered,
            offset,
            s1,
            s2,
            criterion,
        }
    }

    /// Within-cluster cost of the inclusive interval [i, j].
    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        // equal endpoints in sorted order mean a constant interval, whose
        // cost is exactly zero; the prefix-sum form only approximates it
        if self.sorted[i] == self.sorted[j] {
            return 0.0;
        }
        match self.criterion {
            Criterion::Squared => {
                let cnt = (j - i + 1) as f64;
                let sum = self.s1[j + 1] - self.s1[i];
                let sq = self.s2[j + 1] - self.s2[i];
                // cancellation can leave a tiny negative residue
                (sq - sum * sum / cnt).max(0.0)
            }
            Criterion::Absolute => {
                let mid = i + (j - i) / 2; // lower median
                let med = self.centered[mid];
                let left = med * (mid - i + 1) as f64 - (self.s1[mid + 1] - self.s1[i]);
                let right = (self.s1[j + 1] - self.s1[mid + 1]) - med * (j - mid) as f64;
                (left + right).max(0.0)
            }
        }
    }

    fn center(&self, i: usize, j: usize) -> f64 {
        match self.criterion {
            Criterion::Squared => {
                (self.s1[j + 1] - self.s1[i]) / (j - i + 1) as f64 + self.offset
            }
            Criterion::Absolute => self.sorted[i + (j - i) / 2],
        }
    }
}

/// Optimal k-means partition of `values` (squared loss, global optimum).
pub fn solve_kmeans_1d(values: &[f64], k: usize) -> Result<UnivariateSolution> {
    let sample = SortedSample::new(values)?;
    check_k(k, sample.n())?;
    Ok(solve_path_sorted(&sample, k, Criterion::Squared)?.pop().unwrap())
}

/// Optimal k-medians partition of `values` (absolute loss, global optimum).
pub fn solve_kmedians_1d(values: &[f64], k: usize) -> Result<UnivariateSolution> {
    let sample = SortedSample::new(values)?;
    check_k(k, sample.n())?;
    Ok(solve_path_sorted(&sample, k, Criterion::Absolute)?.pop().unwrap())
}

/// Solutions for every k = 1..=kmax from one shared DP table.
pub fn solve_path(values: &[f64], kmax: usize, criterion: Criterion) -> Result<Vec<UnivariateSolution>> {
    let sample = SortedSample::new(values)?;
    check_k(kmax, sample.n())?;
    solve_path_sorted(&sample, kmax, criterion)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::invalid_argument(format!(
            "k must satisfy 1 <= k <= n (got k = {k}, n = {n})"
        )));
    }
    Ok(())
}

/// As [`solve_path`], for a column that is already sorted.
pub fn solve_path_sorted(
    sample: &SortedSample,
    kmax: usize,
    criterion: Criterion,
) -> Result<Vec<UnivariateSolution>> {
    let n = sample.n();
    check_k(kmax, n)?;
    let costs = IntervalCosts::new(&sample.sorted, criterion);

    // dp rows: dp[i] = optimal cost of the prefix [0, i] split into `row + 1`
    // clusters; back[row][i] = start index of the last cluster, smallest
    // among all minimizers (ties broken toward the smallest split, applied
    // recursively through the back rows).
    let mut prev = vec![0.0f64; n];
    for i in 0..n {
        prev[i] = costs.cost(0, i);
    }
    let mut totals = Vec::with_capacity(kmax);
    totals.push(prev[n - 1]);
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(kmax);
    back.push(vec![0u32; n]);

    for row in 1..kmax {
        let mut cur = vec![f64::INFINITY; n];
        let mut back_row = vec![0u32; n];
        for i in row..n {
            let mut best = f64::INFINITY;
            let mut best_j = row;
            for j in row..=i {
                let cand = prev[j - 1] + costs.cost(j, i);
                if cand < best {
                    best = cand;
                    best_j = j;
                }
            }
            cur[i] = best;
            back_row[i] = best_j as u32;
        }
        totals.push(cur[n - 1]);
        back.push(back_row);
        prev = cur;
    }

    let mut solutions = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let mut boundaries = Vec::with_capacity(k - 1);
        let mut end = n - 1;
        for row in (1..k).rev() {
            let j = back[row][end] as usize;
            boundaries.push(j);
            end = j - 1;
        }
        boundaries.reverse();
        let mut centers = Vec::with_capacity(k);
        let mut start = 0;
        for cluster in 0..k {
            let stop = if cluster < k - 1 { boundaries[cluster] } else { n };
            centers.push(costs.center(start, stop - 1));
            start = stop;
        }
        let total = totals[k - 1].max(0.0);
        let objective = match criterion {
            Criterion::Squared => (total / n as f64).sqrt(),
            Criterion::Absolute => total / n as f64,
        };
        solutions.push(UnivariateSolution {
            k,
            boundaries,
            centers,
            objective,
            criterion,
        });
    }
    Ok(solutions)
}
