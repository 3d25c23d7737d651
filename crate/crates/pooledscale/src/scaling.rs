//! Variable scaling: pooled estimators (psd, pmad) and classic scalers.
//!
//! The pooled pipeline per variable: rescale by the range r (Z = X/r), solve
//! the univariate path, pick k* by the gap rule against the shared uniform
//! reference, and report scale = r·S_{k*} (squared) or r·M_{k*} (absolute).
//! A variable with no marginal group structure selects k* = 1 and its pooled
//! scale collapses to the ordinary population spread; a variable with visible
//! groups gets a strictly smaller scale, which boosts its weight after
//! division.
//!
//! The classic scalers follow their textbook forms: sample standard deviation
//! with 1/(n−1), range, and the mean absolute deviation around the median
//! with a 1/(n−1) denominator. The ratio diagnostic divides the classic scale
//! of the matching family by the pooled scale; values well above 1 flag
//! variables whose marginal distribution already separates groups.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::gap::{gap_curve, select_k_gap, GapCurve, GapReference};
use crate::solver1d::{solve_path_sorted, Criterion, SortedSample, UnivariateSolution};

/// Scaling method for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Sd,
    Range,
    Mad,
    Psd,
    Pmad,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::None,
        Method::Sd,
        Method::Range,
        Method::Mad,
        Method::Psd,
        Method::Pmad,
    ];

    /// Loss criterion of the pooled methods; `None` for classic scalers.
    pub fn criterion(self) -> Option<Criterion> {
        match self {
            Method::Psd => Some(Criterion::Squared),
            Method::Pmad => Some(Criterion::Absolute),
            _ => None,
        }
    }

    pub fn is_pooled(self) -> bool {
        self.criterion().is_some()
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::None => "none",
            Method::Sd => "sd",
            Method::Range => "range",
            Method::Mad => "mad",
            Method::Psd => "psd",
            Method::Pmad => "pmad",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Method::None),
            "sd" => Ok(Method::Sd),
            "range" => Ok(Method::Range),
            "mad" => Ok(Method::Mad),
            "psd" => Ok(Method::Psd),
            "pmad" => Ok(Method::Pmad),
            other => Err(Error::invalid_argument(format!(
                "unknown scaling method {other:?}"
            ))),
        }
    }
}

/// Degenerate-case markers on a [`ScaleDecision`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionFlags {
    /// The column is constant; scale is 1 by convention.
    pub constant: bool,
    /// No k < kmax satisfied the gap rule; k* defaulted to kmax.
    pub saturated: bool,
    /// The selected k had zero pooled cost (exact point masses); the scale is
    /// the substitute r·ε̂ with ε̂ the smallest nonzero objective on the path.
    pub zero_cost: bool,
}

impl DecisionFlags {
    pub fn any(&self) -> bool {
        self.constant || self.saturated || self.zero_cost
    }

    pub fn list(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.constant {
            out.push("constant");
        }
        if self.saturated {
            out.push("saturated");
        }
        if self.zero_cost {
            out.push("zero_cost");
        }
        out
    }
}

/// Scaling outcome for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDecision {
    pub variable_id: String,
    pub method: Method,
    /// Divisor applied to the column, in input units; always > 0.
    pub scale: f64,
    /// Selected number of clusters (pooled methods only).
    pub k_star: Option<usize>,
    /// Classic scale of the matching family divided by the pooled scale.
    pub ratio: Option<f64>,
    pub flags: DecisionFlags,
}

/// Run parameters echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub kmax: usize,
    pub b: usize,
    pub c: f64,
    pub seed: u64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            kmax: 10,
            b: 1000,
            c: 1.0,
            seed: 0,
        }
    }
}

/// Per-variable decisions for one scaling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub decisions: Vec<ScaleDecision>,
    pub method: Method,
    pub config: ScaleConfig,
    /// Criterion used by the pooled path; absent for classic methods.
    pub criterion: Option<Criterion>,
}

/// Classic scale of a column: sample sd, range, or mean absolute deviation
/// around the median (1/(n−1) denominator). Returns 0 for constant input;
/// the caller applies the constant-column convention.
pub fn classic_scale(values: &[f64], method: Method) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid_argument("classic scales need n >= 2"));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid_data(format!(
            "non-finite value {} at index {pos}",
            values[pos]
        )));
    }
    match method {
        Method::Sd => Ok(sample_sd(values)),
        Method::Range => {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(max - min)
        }
        Method::Mad => Ok(mean_abs_dev(values)),
        other => Err(Error::invalid_argument(format!(
            "{other} is not a classic scale"
        ))),
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}

/// Σ|xᵢ − median|/(n−1); the median averages the two central order statistics
/// for even n.
fn mean_abs_dev(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    sorted.iter().map(|v| (v - median).abs()).sum::<f64>() / (n as f64 - 1.0)
}

/// Pooled scale decision for one variable against a shared reference.
pub fn pooled_scale_variable(
    values: &[f64],
    variable_id: &str,
    reference: &GapReference,
    c: f64,
) -> Result<ScaleDecision> {
    if c < 0.0 {
        return Err(Error::invalid_argument("c must be nonnegative"));
    }
    if values.len() != reference.n {
        return Err(Error::invalid_argument(format!(
            "column length {} does not match reference n {}",
            values.len(),
            reference.n
        )));
    }
    let criterion = reference.criterion;
    let method = match criterion {
        Criterion::Squared => Method::Psd,
        Criterion::Absolute => Method::Pmad,
    };
    let sample = SortedSample::new(values)?;
    let n = sample.n();
    let r = sample.sorted[n - 1] - sample.sorted[0];
    if r == 0.0 {
        return Ok(ScaleDecision {
            variable_id: variable_id.to_string(),
            method,
            scale: 1.0,
            k_star: Some(1),
            ratio: None,
            flags: DecisionFlags {
                constant: true,
                ..DecisionFlags::default()
            },
        });
    }

    let (curve, path) = rescaled_curve(&sample, r, reference)?;
    let (k_star, saturated) = select_k_gap(&curve, reference, c);

    let mut flags = DecisionFlags {
        saturated,
        ..DecisionFlags::default()
    };
    let mut scale = r * path[k_star - 1].objective;
    if scale == 0.0 {
        flags.zero_cost = true;
        let eps = path
            .iter()
            .rev()
            .map(|sol| sol.objective)
            .find(|&o| o > 0.0)
            .unwrap_or(1e-12);
        scale = r * eps;
    }

    let classic = match criterion {
        Criterion::Squared => sample_sd(values),
        Criterion::Absolute => mean_abs_dev(values),
    };
    Ok(ScaleDecision {
        variable_id: variable_id.to_string(),
        method,
        scale,
        k_star: Some(k_star),
        ratio: Some(classic / scale),
        flags,
    })
}

/// Gap curve and solution path for one non-constant variable, exactly as
/// the pooled decision sees them (on the range-rescaled values).
pub fn variable_gap_curve(
    values: &[f64],
    reference: &GapReference,
) -> Result<(GapCurve, Vec<UnivariateSolution>)> {
    if values.len() != reference.n {
        return Err(Error::invalid_argument(format!(
            "column length {} does not match reference n {}",
            values.len(),
            reference.n
        )));
    }
    let sample = SortedSample::new(values)?;
    let r = sample.sorted[sample.n() - 1] - sample.sorted[0];
    if r == 0.0 {
        return Err(Error::invalid_data("constant column has no gap curve"));
    }
    rescaled_curve(&sample, r, reference)
}

// Z = X/r keeps the solve on a range-1 variable so the shared reference
// applies; boundaries and k* are unchanged by the rescale.
fn rescaled_curve(
    sample: &SortedSample,
    r: f64,
    reference: &GapReference,
) -> Result<(GapCurve, Vec<UnivariateSolution>)> {
    let rescaled = SortedSample {
        sorted: sample.sorted.iter().map(|v| v / r).collect(),
        perm: sample.perm.clone(),
    };
    let path_kmax = reference.kmax.min(sample.n()).min(sample.distinct_count());
    let path = solve_path_sorted(&rescaled, path_kmax, reference.criterion)?;
    let curve = gap_curve(&path, reference)?;
    Ok((curve, path))
}

/// Scale every column of a dataset. Pooled methods build (or load from
/// `cache_dir`) exactly one [`GapReference`] and reuse it across columns.
pub fn scale_dataset(
    matrix: &Array2<f64>,
    names: &[String],
    method: Method,
    config: &ScaleConfig,
    cache_dir: Option<&Path>,
) -> Result<(Array2<f64>, ScaleReport)> {
    let (n, p) = matrix.dim();
    if n < 2 {
        return Err(Error::invalid_argument("need at least two rows"));
    }
    if p == 0 {
        return Err(Error::invalid_argument("need at least one column"));
    }
    if names.len() != p {
        return Err(Error::invalid_argument(format!(
            "{} column names for {p} columns",
            names.len()
        )));
    }

    let decisions: Vec<ScaleDecision> = match method {
        Method::None => names
            .iter()
            .map(|name| ScaleDecision {
                variable_id: name.clone(),
                method,
                scale: 1.0,
                k_star: None,
                ratio: None,
                flags: DecisionFlags::default(),
            })
            .collect(),
        Method::Sd | Method::Range | Method::Mad => {
            let results: Vec<Result<ScaleDecision>> = map_indexed(p, |j| {
                let column = matrix.column(j).to_vec();
                let value = classic_scale(&column, method)?;
                let constant = value == 0.0;
                Ok(ScaleDecision {
                    variable_id: names[j].clone(),
                    method,
                    scale: if constant { 1.0 } else { value },
                    k_star: None,
                    ratio: None,
                    flags: DecisionFlags {
                        constant,
                        ..DecisionFlags::default()
                    },
                })
            });
            results.into_iter().collect::<Result<Vec<_>>>()?
        }
        Method::Psd | Method::Pmad => {
            let criterion = method.criterion().unwrap();
            let kmax = config.kmax.min(n);
            let reference =
                GapReference::load_or_build(cache_dir, n, kmax, config.b, criterion, config.seed)?;
            let results: Vec<Result<ScaleDecision>> = map_indexed(p, |j| {
                let column = matrix.column(j).to_vec();
                pooled_scale_variable(&column, &names[j], &reference, config.c)
            });
            results.into_iter().collect::<Result<Vec<_>>>()?
        }
    };

    let mut scaled = matrix.clone();
    for (j, decision) in decisions.iter().enumerate() {
        let scale = decision.scale;
        scaled.column_mut(j).mapv_inplace(|v| v / scale);
    }
    Ok((
        scaled,
        ScaleReport {
            decisions,
            method,
            config: config.clone(),
            criterion: method.criterion(),
        },
    ))
}

/// Variables ranked by descending classic-to-pooled scale ratio. A ratio near
/// 1 means no detected marginal grouping; large ratios flag screening
/// candidates. Constant columns carry no ratio and are omitted.
pub fn scale_ratios(report: &ScaleReport) -> Result<Vec<(String, f64)>> {
    if !report.method.is_pooled() {
        return Err(Error::invalid_argument(
            "ratio ranking needs a psd or pmad report",
        ));
    }
    let mut out: Vec<(String, f64)> = report
        .decisions
        .iter()
        .filter_map(|d| d.ratio.map(|r| (d.variable_id.clone(), r)))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap::build_reference;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn population_sd(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / n).sqrt()
    }
    use rand::Rng;

    fn small_reference(n: usize, criterion: Criterion) -> GapReference {
        build_reference(n, 8.min(n), 60, criterion, 404).unwrap()
    }

    #[test]
    fn classic_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((classic_scale(&x, Method::Sd).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(classic_scale(&x, Method::Range).unwrap(), 3.0);
        assert!((classic_scale(&x, Method::Mad).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn classic_constant_is_zero() {
        let x = [2.5; 6];
        for method in [Method::Sd, Method::Range, Method::Mad] {
            assert_eq!(classic_scale(&x, method).unwrap(), 0.0);
        }
    }

    #[test]
    fn classic_rejects_pooled_methods() {
        assert!(classic_scale(&[1.0, 2.0], Method::Psd).is_err());
        assert!(classic_scale(&[1.0], Method::Sd).is_err());
    }

    #[test]
    fn constant_column_convention() {
        let reference = small_reference(12, Criterion::Squared);
        let d = pooled_scale_variable(&[3.0; 12], "x", &reference, 1.0).unwrap();
        assert!(d.flags.constant);
        assert_eq!(d.scale, 1.0);
        assert_eq!(d.k_star, Some(1));
        assert_eq!(d.ratio, None);
    }

    #[test]
    fn point_masses_take_substitute_scale() {
        let mut values = vec![0.0; 50];
        values.extend(vec![1.0; 50]);
        let reference = small_reference(100, Criterion::Squared);
        let d = pooled_scale_variable(&values, "x", &reference, 1.0).unwrap();
        assert_eq!(d.k_star, Some(2));
        assert!(d.flags.zero_cost);
        // ε̂ is the smallest nonzero objective on the path, here S₁ = 0.5
        assert!((d.scale - 0.5).abs() < 1e-12);
        assert!(d.scale > 0.0);
    }

    #[test]
    fn same_reference_fixed_point() {
        // scaling an already-pooled-scaled column with the same reference
        // returns scale 1 exactly (up to float error), for any k*
        let reference = small_reference(60, Criterion::Squared);
        let mut rng = stream_rng(88, 0);
        let values: Vec<f64> = (0..60)
            .map(|i| if i < 30 { 0.0 } else { 9.0 } + rng.random::<f64>())
            .collect();
        let first = pooled_scale_variable(&values, "x", &reference, 1.0).unwrap();
        let rescaled: Vec<f64> = values.iter().map(|v| v / first.scale).collect();
        let second = pooled_scale_variable(&rescaled, "x", &reference, 1.0).unwrap();
        assert_eq!(second.k_star, first.k_star);
        assert!((second.scale - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn scale_dataset_none_is_identity() {
        let matrix = Array2::from_shape_vec((3, 2), vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let (scaled, report) =
            scale_dataset(&matrix, &names, Method::None, &ScaleConfig::default(), None).unwrap();
        assert_eq!(scaled, matrix);
        assert_eq!(report.decisions.len(), 2);
        assert!(report.decisions.iter().all(|d| d.scale == 1.0));
    }

    #[test]
    fn report_covers_every_column_once() {
        let mut rng = stream_rng(3, 0);
        let matrix = Array2::from_shape_fn((40, 5), |_| rng.random::<f64>());
        let names: Vec<String> = (0..5).map(|j| format!("v{}", j + 1)).collect();
        let config = ScaleConfig {
            b: 40,
            ..ScaleConfig::default()
        };
        for method in Method::ALL {
            let (_, report) = scale_dataset(&matrix, &names, method, &config, None).unwrap();
            let ids: Vec<&str> = report.decisions.iter().map(|d| d.variable_id.as_str()).collect();
            assert_eq!(ids, names.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ratios_rank_descending() {
        let mut rng = stream_rng(9, 0);
        // column 0 has two clear groups, column 1 is diffuse noise
        let mut grouped = Vec::new();
        let mut diffuse = Vec::new();
        for i in 0..80 {
            grouped.push(if i < 40 { 0.0 } else { 12.0 } + rng.random::<f64>());
            diffuse.push(rng.random::<f64>() * 5.0);
        }
        let mut flat = Vec::with_capacity(160);
        for i in 0..80 {
            flat.push(grouped[i]);
            flat.push(diffuse[i]);
        }
        let matrix = Array2::from_shape_vec((80, 2), flat).unwrap();
        let names = vec!["grouped".to_string(), "diffuse".to_string()];
        let config = ScaleConfig {
            b: 60,
            ..ScaleConfig::default()
        };
        let (_, report) = scale_dataset(&matrix, &names, Method::Psd, &config, None).unwrap();
        let ranked = scale_ratios(&report).unwrap();
        assert_eq!(ranked[0].0, "grouped");
        assert!(ranked[0].1 > ranked[1].1);
        assert!(ranked[0].1 > 2.0);
    }

    #[test]
    fn ratios_reject_classic_reports() {
        let report = ScaleReport {
            decisions: vec![],
            method: Method::Sd,
            config: ScaleConfig::default(),
            criterion: None,
        };
        assert!(scale_ratios(&report).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn psd_dominated_by_population_sd(seed in 0u64..1000, two_groups in any::<bool>()) {
            let mut rng = stream_rng(seed, 0);
            let values: Vec<f64> = (0..50)
                .map(|i| {
                    let shift = if two_groups && i >= 25 { 6.0 } else { 0.0 };
                    shift + rng.random::<f64>()
                })
                .collect();
            let reference = small_reference(50, Criterion::Squared);
            let d = pooled_scale_variable(&values, "x", &reference, 1.0).unwrap();
            let pop = population_sd(&values);
            prop_assert!(d.scale <= pop * (1.0 + 1e-9));
            prop_assert!(d.ratio.unwrap() >= 1.0 - 1e-9);
        }

        #[test]
        fn pmad_dominated_by_m1(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 1);
            let values: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 7.0).collect();
            let reference = small_reference(40, Criterion::Absolute);
            let d = pooled_scale_variable(&values, "x", &reference, 1.0).unwrap();
            let m1 = crate::solver1d::solve_kmedians_1d(&values, 1).unwrap().objective;
            prop_assert!(d.scale <= m1 * (1.0 + 1e-9));
            prop_assert!(d.ratio.unwrap() >= 1.0 - 1e-9);
        }
    }
}
