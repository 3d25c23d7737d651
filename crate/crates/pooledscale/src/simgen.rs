//! Synthetic cluster data and the factorial simulation runner.
//!
//! Datasets are built in three stages: spherical unit-variance gaussian
//! clusters around calibrated centers, optional outlier contamination of the
//! signal columns, then appended noise columns. Center spacing follows the
//! closed-form two-cluster calibration d(J) = 2·z_{0.975}·(1+J)/(1−J), the
//! distance at which the quantile-overlap separation index of two
//! unit-variance normals along their center line equals J. Centers sit on
//! random orthonormal directions so every center's nearest neighbor is at
//! exactly d; with fewer dimensions than clusters − 1 the layout degrades to
//! a line and the dataset carries a warning.
//!
//! The runner executes cells × replicates as independent jobs. Every job
//! seeds its generator from (master seed, cell, replicate), so tables are
//! reproducible regardless of scheduling.

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::fmt_sig;
use crate::engines::{Engine, Partition};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::gap::{build_reference, GapReference};
use crate::rng::{mix, stream_rng};
use crate::scaling::{classic_scale, pooled_scale_variable, Method, ScaleConfig};
use crate::solver1d::Criterion;

pub const Z_975: f64 = 1.959963984540054;

/// Nearest-neighbor center distance that realises separation index `j` for
/// two unit-variance normals at the 0.05 level.
pub fn center_distance(j: f64) -> f64 {
    2.0 * Z_975 * (1.0 + j) / (1.0 - j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Separated,
    WellSeparated,
}

impl Separation {
    pub fn index(self) -> f64 {
        match self {
            Separation::Separated => 0.21,
            Separation::WellSeparated => 0.34,
        }
    }
}

impl std::fmt::Display for Separation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Separation::Separated => "separated",
            Separation::WellSeparated => "well_separated",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Separation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separated" => Ok(Separation::Separated),
            "well_separated" | "well-separated" => Ok(Separation::WellSeparated),
            other => Err(Error::invalid_argument(format!(
                "unknown separation level '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseType {
    Gaussian,
    Uniform,
}

impl std::fmt::Display for NoiseType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            NoiseType::Gaussian => "gaussian",
            NoiseType::Uniform => "uniform",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for NoiseType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseType::Gaussian),
            "uniform" => Ok(NoiseType::Uniform),
            other => Err(Error::invalid_argument(format!(
                "unknown noise type '{other}'"
            ))),
        }
    }
}

pub const CLEAN_VARS_LEVELS: [usize; 5] = [2, 4, 6, 8, 10];
pub const CLUSTERS_LEVELS: [usize; 4] = [2, 3, 4, 5];
pub const NOISE_PCT_LEVELS: [u32; 8] = [0, 50, 100, 150, 200, 500, 1000, 2000];
pub const OUTLIER_PCT_LEVELS: [u32; 2] = [0, 5];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub clean_vars: usize,
    pub clusters: usize,
    pub separation: Separation,
    pub noise_pct: u32,
    pub noise_type: NoiseType,
    pub outlier_pct: u32,
    pub cluster_size: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            clean_vars: 4,
            clusters: 2,
            separation: Separation::WellSeparated,
            noise_pct: 0,
            noise_type: NoiseType::Gaussian,
            outlier_pct: 0,
            cluster_size: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn n(&self) -> usize {
        self.clusters * self.cluster_size
    }

    /// Structural validity; free-form levels are allowed.
    pub fn validate(&self) -> Result<()> {
        if self.clean_vars == 0 {
            return Err(Error::invalid_argument("need at least one clean variable"));
        }
        if self.clusters == 0 {
            return Err(Error::invalid_argument("need at least one cluster"));
        }
        if self.cluster_size == 0 {
            return Err(Error::invalid_argument("cluster size must be positive"));
        }
        if self.outlier_pct > 100 {
            return Err(Error::invalid_argument("outlier percentage above 100"));
        }
        Ok(())
    }

    /// Strict check against the factorial design levels.
    pub fn validate_levels(&self) -> Result<()> {
        self.validate()?;
        if !CLEAN_VARS_LEVELS.contains(&self.clean_vars) {
            return Err(Error::invalid_argument(format!(
                "clean_vars = {} is not a design level",
                self.clean_vars
            )));
        }
        if !CLUSTERS_LEVELS.contains(&self.clusters) {
            return Err(Error::invalid_argument(format!(
                "clusters = {} is not a design level",
                self.clusters
            )));
        }
        if !NOISE_PCT_LEVELS.contains(&self.noise_pct) {
            return Err(Error::invalid_argument(format!(
                "noise_pct = {} is not a design level",
                self.noise_pct
            )));
        }
        if !OUTLIER_PCT_LEVELS.contains(&self.outlier_pct) {
            return Err(Error::invalid_argument(format!(
                "outlier_pct = {} is not a design level",
                self.outlier_pct
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub matrix: Array2<f64>,
    pub truth: Partition,
    pub clean_mask: Vec<bool>,
    pub warnings: Vec<String>,
}

// substream tags keep the three pipeline stages and the runner on disjoint
// generator streams
const TAG_GENERATE: u64 = 1;
const TAG_OUTLIERS: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_CELL: u64 = 4;
const TAG_EVAL: u64 = 5;
const TAG_REFERENCE: u64 = 6;

fn orthonormal_directions(rng: &mut impl Rng, p: usize, count: usize) -> Vec<Vec<f64>> {
    debug_assert!(count <= p);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        for u in &basis {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    basis
}

/// Clean variables only: spherical unit-variance clusters of equal size at
/// the calibrated separation.
pub fn generate_clusters(config: &SimConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let p = config.clean_vars;
    let clusters = config.clusters;
    let n = config.n();
    let mut rng = stream_rng(mix(config.seed, TAG_GENERATE), 0);
    let mut warnings = Vec::new();

    let d = center_distance(config.separation.index());
    let centers: Vec<Vec<f64>> = if clusters == 1 {
        vec![vec![0.0; p]]
    } else if p >= clusters - 1 {
        let mut out = vec![vec![0.0; p]];
        for direction in orthonormal_directions(&mut rng, p, clusters - 1) {
            out.push(direction.iter().map(|x| x * d).collect());
        }
        out
    } else {
        warnings.push(format!(
            "{clusters} clusters need {} dimensions for orthonormal placement; \
             using a line layout in {p}",
            clusters - 1
        ));
        let direction = orthonormal_directions(&mut rng, p, 1).pop().unwrap();
        (0..clusters)
            .map(|g| direction.iter().map(|x| x * d * g as f64).collect())
            .collect()
    };

    let mut data = Vec::with_capacity(n * p);
    for center in &centers {
        for _ in 0..config.cluster_size {
            for &c in center {
                let z: f64 = rng.sample(StandardNormal);
                data.push(c + z);
            }
        }
    }
    let matrix = Array2::from_shape_vec((n, p), data).expect("shape matches fill");
    let labels: Vec<usize> = (0..n).map(|i| i / config.cluster_size).collect();
    Ok(LabeledDataset {
        matrix,
        truth: Partition::new(labels, clusters)?,
        clean_mask: vec![true; p],
        warnings,
    })
}

/// Replace floor(outlier_pct/100·n) entries of each clean column with draws
/// from Uniform[mean − 4·sd, mean + 4·sd] of that column, moments taken
/// before any replacement.
pub fn contaminate(dataset: LabeledDataset, config: &SimConfig) -> Result<LabeledDataset> {
    if config.outlier_pct == 0 {
        return Ok(dataset);
    }
    let mut dataset = dataset;
    let n = dataset.matrix.nrows();
    let count = (config.outlier_pct as f64 / 100.0 * n as f64).floor() as usize;
    if count == 0 {
        return Ok(dataset);
    }
    let mut rng = stream_rng(mix(config.seed, TAG_OUTLIERS), 0);
    for j in 0..dataset.matrix.ncols() {
        if !dataset.clean_mask[j] {
            continue;
        }
        let column = dataset.matrix.column(j);
        let mean = column.sum() / n as f64;
        let sd = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        if sd == 0.0 {
            continue;
        }
        let rows = index::sample(&mut rng, n, count);
        for r in rows {
            dataset.matrix[[r, j]] = rng.random_range(mean - 4.0 * sd..mean + 4.0 * sd);
        }
    }
    Ok(dataset)
}

/// Append round(noise_pct/100·clean_vars) noise columns. Gaussian noise is
/// standard normal; uniform noise permutes an equally spaced grid over the
/// pooled clean range and perturbs it with N(0, (1% of range)²).
pub fn add_noise_variables(dataset: LabeledDataset, config: &SimConfig) -> Result<LabeledDataset> {
    let clean_count = dataset.clean_mask.iter().filter(|&&c| c).count();
    let count = (config.noise_pct as f64 / 100.0 * clean_count as f64).round() as usize;
    if count == 0 {
        return Ok(dataset);
    }
    let n = dataset.matrix.nrows();
    let p = dataset.matrix.ncols();
    let mut rng = stream_rng(mix(config.seed, TAG_NOISE), 0);

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..p {
        if !dataset.clean_mask[j] {
            continue;
        }
        for &v in dataset.matrix.column(j) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let sigma_p = 0.01 * (hi - lo);

    let mut wide = Array2::zeros((n, p + count));
    wide.slice_mut(ndarray::s![.., ..p]).assign(&dataset.matrix);
    for c in 0..count {
        match config.noise_type {
            NoiseType::Gaussian => {
                for i in 0..n {
                    wide[[i, p + c]] = rng.sample(StandardNormal);
                }
            }
            NoiseType::Uniform => {
                let mut grid: Vec<f64> = if n == 1 {
                    vec![lo]
                } else {
                    (0..n)
                        .map(|i| lo + i as f64 * (hi - lo) / (n as f64 - 1.0))
                        .collect()
                };
                grid.shuffle(&mut rng);
                for (i, g) in grid.into_iter().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    wide[[i, p + c]] = g + sigma_p * z;
                }
            }
        }
    }

    let mut clean_mask = dataset.clean_mask;
    clean_mask.extend(std::iter::repeat(false).take(count));
    Ok(LabeledDataset {
        matrix: wide,
        truth: dataset.truth,
        clean_mask,
        warnings: dataset.warnings,
    })
}

/// Full pipeline: generate, contaminate, append noise.
pub fn make_dataset(config: &SimConfig) -> Result<LabeledDataset> {
    let clean = generate_clusters(config)?;
    let contaminated = contaminate(clean, config)?;
    add_noise_variables(contaminated, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: usize,
    pub replicate: usize,
    pub clean_vars: usize,
    pub clusters: usize,
    pub separation: Separation,
    pub noise_pct: u32,
    pub noise_type: NoiseType,
    pub outlier_pct: u32,
    pub cluster_size: usize,
    pub scaler: Method,
    pub engine: String,
    pub best_ari: f64,
    pub best_k: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub noise_pct: u32,
    pub scaler: Method,
    pub engine: String,
    pub mean_ari: f64,
    pub sd_ari: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Mean best ARI over non-error rows matching the filter; None if the
    /// selection is empty.
    pub fn mean_ari(&self, filter: impl Fn(&ResultRow) -> bool) -> Option<f64> {
        let selected: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.error.is_none() && filter(r))
            .map(|r| r.best_ari)
            .collect();
        if selected.is_empty() {
            None
        } else {
            Some(selected.iter().sum::<f64>() / selected.len() as f64)
        }
    }

    /// Mean and sd of best ARI grouped by noise level, scaler, and engine.
    pub fn summarize(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(u32, usize, String), Vec<f64>> = BTreeMap::new();
        for row in self.rows.iter().filter(|r| r.error.is_none()) {
            let scaler_order = Method::ALL.iter().position(|m| *m == row.scaler).unwrap();
            groups
                .entry((row.noise_pct, scaler_order, row.engine.clone()))
                .or_default()
                .push(row.best_ari);
        }
        groups
            .into_iter()
            .map(|((noise_pct, scaler_order, engine), values)| {
                let count = values.len();
                let mean = values.iter().sum::<f64>() / count as f64;
                let sd = if count > 1 {
                    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count as f64 - 1.0))
                        .sqrt()
                } else {
                    0.0
                };
                SummaryRow {
                    noise_pct,
                    scaler: Method::ALL[scaler_order],
                    engine,
                    mean_ari: mean,
                    sd_ari: sd,
                    replicates: count,
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "cell,replicate,clean_vars,clusters,separation,noise_pct,noise_type,\
             outlier_pct,cluster_size,scaler,engine,best_ari,best_k,error\n",
        );
        for r in &self.rows {
            let ari = if r.error.is_some() {
                String::new()
            } else {
                fmt_sig(r.best_ari, 12)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.cell,
                r.replicate,
                r.clean_vars,
                r.clusters,
                r.separation,
                r.noise_pct,
                r.noise_type,
                r.outlier_pct,
                r.cluster_size,
                r.scaler,
                r.engine,
                ari,
                r.best_k,
                csv_field(r.error.as_deref().unwrap_or(""))
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("noise_pct,scaler,engine,mean_best_ari,sd_best_ari,replicates\n");
        for s in self.summarize() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.noise_pct,
                s.scaler,
                s.engine,
                fmt_sig(s.mean_ari, 12),
                fmt_sig(s.sd_ari, 12),
                s.replicates
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn scale_matrix(
    matrix: &Array2<f64>,
    method: Method,
    reference: Option<&GapReference>,
    c: f64,
) -> Result<Array2<f64>> {
    let mut out = matrix.clone();
    match method {
        Method::None => {}
        Method::Sd | Method::Range | Method::Mad => {
            for j in 0..out.ncols() {
                let column = matrix.column(j).to_vec();
                let scale = classic_scale(&column, method)?;
                if scale > 0.0 {
                    out.column_mut(j).mapv_inplace(|v| v / scale);
                }
            }
        }
        Method::Psd | Method::Pmad => {
            let reference = reference
                .ok_or_else(|| Error::invalid_argument("pooled scaling needs a reference"))?;
            for j in 0..out.ncols() {
                let column = matrix.column(j).to_vec();
                let decision = pooled_scale_variable(&column, &format!("v{}", j + 1), reference, c)?;
                out.column_mut(j).mapv_inplace(|v| v / decision.scale);
            }
        }
    }
    Ok(out)
}

/// Execute the factorial design: every cell × replicate is generated once
/// and evaluated under every scaler × engine combination. Bootstrap
/// references are shared per (n, criterion); `gap.seed` is superseded by a
/// stream derived from `seed` so one argument controls the whole run. Any
/// per-job failure lands in the row's error field and the run continues.
pub fn run_design(
    grid: &[SimConfig],
    scalers: &[Method],
    engines: &[Engine],
    reps: usize,
    seed: u64,
    gap: &ScaleConfig,
) -> Result<ResultsTable> {
    if grid.is_empty() || scalers.is_empty() || engines.is_empty() {
        return Err(Error::invalid_argument(
            "grid, scalers, and engines must be nonempty",
        ));
    }
    if reps == 0 {
        return Err(Error::invalid_argument("need at least one replicate"));
    }
    for config in grid {
        config.validate()?;
    }

    let mut needed: HashSet<(usize, Criterion)> = HashSet::new();
    for config in grid {
        for method in scalers {
            if let Some(criterion) = method.criterion() {
                needed.insert((config.n(), criterion));
            }
        }
    }
    let mut references: HashMap<(usize, Criterion), GapReference> = HashMap::new();
    for (n, criterion) in needed {
        let reference = build_reference(
            n,
            gap.kmax.min(n),
            gap.b,
            criterion,
            mix(seed, TAG_REFERENCE),
        )?;
        references.insert((n, criterion), reference);
    }

    let engine_names: Vec<String> = engines.iter().map(|e| e.to_string()).collect();
    let jobs = grid.len() * reps;
    let nested: Vec<Vec<ResultRow>> = map_indexed(jobs, |job| {
        let cell = job / reps;
        let rep = job % reps;
        let mut config = grid[cell].clone();
        config.seed = mix(mix(mix(seed, TAG_CELL), cell as u64), rep as u64);

        let template = |scaler: Method, engine: &str| ResultRow {
            cell,
            replicate: rep,
            clean_vars: config.clean_vars,
            clusters: config.clusters,
            separation: config.separation,
            noise_pct: config.noise_pct,
            noise_type: config.noise_type,
            outlier_pct: config.outlier_pct,
            cluster_size: config.cluster_size,
            scaler,
            engine: engine.to_string(),
            best_ari: f64::NAN,
            best_k: 0,
            error: None,
        };

        let mut rows = Vec::with_capacity(scalers.len() * engines.len());
        let dataset = match make_dataset(&config) {
            Ok(dataset) => dataset,
            Err(e) => {
                for &scaler in scalers {
                    for name in &engine_names {
                        let mut row = template(scaler, name);
                        row.error = Some(e.to_string());
                        rows.push(row);
                    }
                }
                return rows;
            }
        };

        for (si, &scaler) in scalers.iter().enumerate() {
            let reference = scaler
                .criterion()
                .and_then(|criterion| references.get(&(config.n(), criterion)));
            let scaled = scale_matrix(&dataset.matrix, scaler, reference, gap.c);
            match scaled {
                Ok(scaled) => {
                    for (ei, engine) in engines.iter().enumerate() {
                        let mut row = template(scaler, &engine_names[ei]);
                        let eval_seed = mix(config.seed, mix(TAG_EVAL, (si * 64 + ei) as u64));
                        match crate::evaluation::best_ari_over_k(
                            &scaled,
                            &dataset.truth,
                            engine,
                            eval_seed,
                        ) {
                            Ok((ari, k)) => {
                                row.best_ari = ari;
                                row.best_k = k;
                            }
                            Err(e) => row.error = Some(e.to_string()),
                        }
                        rows.push(row);
                    }
                }
                Err(e) => {
                    for name in &engine_names {
                        let mut row = template(scaler, name);
                        row.error = Some(e.to_string());
                        rows.push(row);
                    }
                }
            }
        }
        rows
    });

    Ok(ResultsTable {
        rows: nested.into_iter().flatten().collect(),
    })
}

/// Named cell grids. `figure2` walks noise levels on clean data,
/// `figure2-outliers` repeats it with 5% contamination, `table2` is the full
/// factorial crossing.
pub fn preset(name: &str) -> Result<Vec<SimConfig>> {
    match name {
        "figure2" | "figure2-outliers" => {
            let outlier_pct = if name == "figure2" { 0 } else { 5 };
            let mut grid = Vec::new();
            for &noise_pct in &[0, 100, 500, 1000, 2000] {
                for &noise_type in &[NoiseType::Gaussian, NoiseType::Uniform] {
                    grid.push(SimConfig {
                        noise_pct,
                        noise_type,
                        outlier_pct,
                        ..SimConfig::default()
                    });
                }
            }
            Ok(grid)
        }
        "table2" => {
            let mut grid = Vec::new();
            for &clean_vars in &CLEAN_VARS_LEVELS {
                for &clusters in &CLUSTERS_LEVELS {
                    for &separation in &[Separation::Separated, Separation::WellSeparated] {
                        for &noise_pct in &NOISE_PCT_LEVELS {
                            for &noise_type in &[NoiseType::Gaussian, NoiseType::Uniform] {
                                for &outlier_pct in &OUTLIER_PCT_LEVELS {
                                    grid.push(SimConfig {
                                        clean_vars,
                                        clusters,
                                        separation,
                                        noise_pct,
                                        noise_type,
                                        outlier_pct,
                                        ..SimConfig::default()
                                    });
                                }
                            }
                        }
                    }
                }
            }
            Ok(grid)
        }
        other => Err(Error::invalid_argument(format!(
            "unknown preset '{other}' (expected figure2, figure2-outliers, or table2)"
        ))),
    }
}
