//! Gap-statistic selection of the per-variable number of clusters.
//!
//! The reference distribution is Uniform[0,1]: B bootstrap samples of size n
//! are solved over k = 1..=kmax and summarized by m_k (mean of log W*_k) and
//! s_k = sqrt(1+1/B)·sd_k. Because the pipeline rescales every variable to
//! range 1 before solving, one reference serves all variables of a dataset
//! (the gap curve is invariant under affine maps of the raw column), which is
//! the fast path that makes the bootstrap affordable.
//!
//! A jump-statistic selector over the same solution path is provided as an
//! alternative.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::rng::stream_rng;
use crate::solver1d::{solve_path_sorted, Criterion, SortedSample, UnivariateSolution};

/// Bootstrap summary shared by all variables of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReference {
    pub n: usize,
    pub kmax: usize,
    /// Number of bootstrap replicates.
    pub b: usize,
    pub criterion: Criterion,
    /// m_k = mean over replicates of log W*_k.
    pub m: Vec<f64>,
    /// Population standard deviation of log W*_k over replicates.
    pub sd: Vec<f64>,
    /// s_k = sqrt(1 + 1/B)·sd_k.
    pub s: Vec<f64>,
    pub seed: u64,
}

/// Per-variable gap values against a [`GapReference`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    /// gap[k−1] = m_k − log W_k; +∞ where W_k = 0 (zero pooled cost is
    /// maximal evidence of k point masses).
    pub gap: Vec<f64>,
    pub log_w: Vec<f64>,
    pub criterion: Criterion,
}

/// Build the uniform reference: replicate b draws n values from Uniform[0,1]
/// on RNG substream b, solves the full path, and records log W*_k.
/// Deterministic given the seed, independent of evaluation order.
pub fn build_reference(
    n: usize,
    kmax: usize,
    b: usize,
    criterion: Criterion,
    seed: u64,
) -> Result<GapReference> {
    if kmax < 1 || kmax > n {
        return Err(Error::invalid_argument(format!(
            "kmax must satisfy 1 <= kmax <= n (got kmax = {kmax}, n = {n})"
        )));
    }
    if b < 2 {
        return Err(Error::invalid_argument(format!("need B >= 2 replicates, got {b}")));
    }

    let rows: Vec<Result<Vec<f64>>> = map_indexed(b, |rep| {
        use rand::Rng;
        let mut rng = stream_rng(seed, rep as u64);
        let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sample = SortedSample::new(&draws)?;
        let path = solve_path_sorted(&sample, kmax, criterion)?;
        Ok(path.iter().map(|sol| sol.pooled_w(n).ln()).collect())
    });

    let mut log_w = Vec::with_capacity(b);
    for row in rows {
        log_w.push(row?);
    }
    let bf = b as f64;
    let mut m = vec![0.0; kmax];
    let mut sd = vec![0.0; kmax];
    for k in 0..kmax {
        let mean = log_w.iter().map(|row| row[k]).sum::<f64>() / bf;
        let var = log_w.iter().map(|row| (row[k] - mean).powi(2)).sum::<f64>() / bf;
        m[k] = mean;
        sd[k] = var.sqrt();
    }
    let s = sd.iter().map(|&v| (1.0 + 1.0 / bf).sqrt() * v).collect();
    Ok(GapReference {
        n,
        kmax,
        b,
        criterion,
        m,
        sd,
        s,
        seed,
    })
}

/// Gap curve for one variable's solution path (computed on data rescaled to
/// range 1, per the scaling pipeline's contract). The path may be shorter
/// than the reference when k is capped by the number of distinct values; the
/// reference prefix is exact for any such cap.
pub fn gap_curve(solutions: &[UnivariateSolution], reference: &GapReference) -> Result<GapCurve> {
    if solutions.is_empty() || solutions.len() > reference.kmax {
        return Err(Error::invalid_argument(format!(
            "solution path length {} incompatible with reference kmax {}",
            solutions.len(),
            reference.kmax
        )));
    }
    if solutions[0].criterion != reference.criterion {
        return Err(Error::invalid_argument(
            "solution criterion does not match reference criterion",
        ));
    }
    let n = reference.n;
    let mut gap = Vec::with_capacity(solutions.len());
    let mut log_w = Vec::with_capacity(solutions.len());
    for (k_idx, sol) in solutions.iter().enumerate() {
        let lw = sol.pooled_w(n).ln(); // −∞ when W = 0
        log_w.push(lw);
        gap.push(reference.m[k_idx] - lw); // +∞ when W = 0
    }
    Ok(GapCurve {
        gap,
        log_w,
        criterion: reference.criterion,
    })
}

/// Smallest k in 1..kmax−1 with Gap(k) ≥ Gap(k+1) − c·s_{k+1}; if none
/// qualifies, k* = kmax with the saturation flag set.
///
/// An infinite gap (W_k = 0) wins the scan at its own k: a finite gap can
/// never reach the threshold set by an infinite successor, so the scan walks
/// forward to the smallest zero-cost k and the rule fires there. The tail
/// check covers that k falling on kmax itself, where a zero-cost selection is
/// decisive, not saturated.
pub fn select_k_gap(curve: &GapCurve, reference: &GapReference, c: f64) -> (usize, bool) {
    let kmax = curve.gap.len();
    for k_idx in 0..kmax.saturating_sub(1) {
        if curve.gap[k_idx] >= curve.gap[k_idx + 1] - c * reference.s[k_idx + 1] {
            return (k_idx + 1, false);
        }
    }
    if curve.gap[kmax - 1] == f64::INFINITY {
        return (kmax, false);
    }
    (kmax, true)
}

/// Jump selector: argmax of J_k = d̂_k^{−1/2} − d̂_{k−1}^{−1/2} with
/// d̂_k = S_k² and J_1 = d̂_1^{−1/2}; ties and zero distortions resolve to
/// the smallest k.
pub fn select_k_jump(solutions: &[UnivariateSolution]) -> Result<usize> {
    if solutions.is_empty() {
        return Err(Error::invalid_argument("empty solution path"));
    }
    if solutions[0].criterion != Criterion::Squared {
        return Err(Error::invalid_argument(
            "jump selection is defined for the squared criterion",
        ));
    }
    let mut best_k = 1;
    let mut best_jump = f64::NEG_INFINITY;
    let mut prev_inv = 0.0;
    for (k_idx, sol) in solutions.iter().enumerate() {
        let distortion = sol.objective * sol.objective;
        if distortion == 0.0 {
            return Ok(k_idx + 1);
        }
        let inv = distortion.powf(-0.5);
        let jump = inv - prev_inv;
        if jump > best_jump {
            best_jump = jump;
            best_k = k_idx + 1;
        }
        prev_inv = inv;
    }
    Ok(best_k)
}

impl GapReference {
    /// Cache file name for this reference's key tuple.
    pub fn cache_file_name(n: usize, kmax: usize, b: usize, criterion: Criterion, seed: u64) -> String {
        format!("gapref-n{n}-kmax{kmax}-B{b}-{criterion}-seed{seed}.json")
    }

    /// Load a cached reference if `cache_dir` holds a record with the exact
    /// key tuple, otherwise build it (and persist it when a directory is
    /// given). Stale or foreign files are rebuilt, not trusted.
    pub fn load_or_build(
        cache_dir: Option<&Path>,
        n: usize,
        kmax: usize,
        b: usize,
        criterion: Criterion,
        seed: u64,
    ) -> Result<GapReference> {
        let file = cache_dir.map(|dir| dir.join(Self::cache_file_name(n, kmax, b, criterion, seed)));
        if let Some(path) = &file {
            if let Ok(text) = std::fs::read_to_string(path) {
                if let Ok(reference) = serde_json::from_str::<GapReference>(&text) {
                    if reference.n == n
                        && reference.kmax == kmax
                        && reference.b == b
                        && reference.criterion == criterion
                        && reference.seed == seed
                    {
                        return Ok(reference);
                    }
                }
            }
        }
        let reference = build_reference(n, kmax, b, criterion, seed)?;
        if let Some(path) = &file {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            write_atomic(path, &serde_json::to_string_pretty(&reference)?)?;
        }
        Ok(reference)
    }
}
