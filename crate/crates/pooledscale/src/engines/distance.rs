//! Pairwise distance matrices.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
}

/// Symmetric distance matrix stored as the strict lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMatrix {
    pub n: usize,
    /// Row-major strict lower triangle: entry (i, j) with i > j sits at
    /// i·(i−1)/2 + j.
    pub entries: Vec<f64>,
    pub metric: Metric,
}

impl DistMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.entries[hi * (hi - 1) / 2 + lo]
    }
}

pub fn pairwise_distances(data: &Array2<f64>, metric: Metric) -> DistMatrix {
    let n = data.nrows();
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        let row_i = data.row(i);
        for j in 0..i {
            let row_j = data.row(j);
            let d = match metric {
                Metric::Euclidean => row_i
                    .iter()
                    .zip(row_j.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt(),
                Metric::Manhattan => row_i
                    .iter()
                    .zip(row_j.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>(),
            };
            entries.push(d);
        }
    }
    DistMatrix { n, entries, metric }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn identical_rows_have_zero_distance() {
        let data = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        for metric in [Metric::Euclidean, Metric::Manhattan] {
            assert_eq!(pairwise_distances(&data, metric).get(0, 1), 0.0);
        }
    }

    #[test]
    fn three_four_five_triangle() {
        let data = Array2::from_shape_vec((2, 2), vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(pairwise_distances(&data, Metric::Euclidean).get(1, 0), 5.0);
        assert_eq!(pairwise_distances(&data, Metric::Manhattan).get(1, 0), 7.0);
    }

    #[test]
    fn matches_double_loop_recomputation() {
        let mut rng = stream_rng(15, 0);
        let data = Array2::from_shape_fn((5, 3), |_| rng.random::<f64>() * 4.0 - 2.0);
        for metric in [Metric::Euclidean, Metric::Manhattan] {
            let dist = pairwise_distances(&data, metric);
            for i in 0..5 {
                for j in 0..5 {
                    let mut expect = 0.0;
                    for c in 0..3 {
                        let diff: f64 = data[[i, c]] - data[[j, c]];
                        expect += match metric {
                            Metric::Euclidean => diff * diff,
                            Metric::Manhattan => diff.abs(),
                        };
                    }
                    if metric == Metric::Euclidean {
                        expect = expect.sqrt();
                    }
                    assert!((dist.get(i, j) - expect).abs() <= 1e-12);
                    assert_eq!(dist.get(i, j), dist.get(j, i));
                }
            }
        }
    }
}
