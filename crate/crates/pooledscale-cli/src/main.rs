//! Command line front end. One subcommand per pipeline capability; all
//! randomness flows from --seed, so identical invocations produce
//! byte-identical outputs. Files are written atomically (temp then rename).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pooledscale::dataset::{
    fmt_sig, label_partition, matrix_csv, read_dataset, write_atomic, Dataset, ReadOptions,
};
use pooledscale::engines::{hclust, pairwise_distances, run_engine, Engine, Metric};
use pooledscale::error::{Error, Result};
use pooledscale::gap::{select_k_gap, GapReference};
use pooledscale::scaling::{
    scale_dataset, scale_ratios, variable_gap_curve, Method, ScaleConfig, ScaleReport,
};
use pooledscale::simgen::{preset, run_design};
use pooledscale::{adjusted_rand_index, Partition};

#[derive(Parser)]
#[command(
    name = "pooledscale",
    version,
    about = "Pooled variable scaling for cluster analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scale a dataset and report per-variable decisions
    Scale(ScaleArgs),
    /// Cluster a dataset at a fixed k, or emit a dendrogram merge list
    Cluster(ClusterArgs),
    /// Adjusted Rand index between two label files
    Ari(AriArgs),
    /// Per-variable gap curves and selected k*
    GapReport(GapReportArgs),
    /// Classic-to-pooled scale ratios, largest first
    Ratios(RatiosArgs),
    /// Run a simulation preset and write the results table
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input delimited file
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    /// Field delimiter (single character, or 'tab')
    #[arg(long, default_value = ",")]
    delimiter: String,

    /// Treat the first row as data, naming columns v1..vp
    #[arg(long)]
    no_header: bool,

    /// Column to hold out as reference labels
    #[arg(long, value_name = "NAME")]
    label: Option<String>,
}

impl InputArgs {
    fn read(&self) -> Result<Dataset> {
        let delimiter = match self.delimiter.as_str() {
            "tab" | "\\t" => b'\t',
            s if s.len() == 1 => s.as_bytes()[0],
            other => {
                return Err(Error::invalid_argument(format!(
                    "delimiter must be one character, got '{other}'"
                )))
            }
        };
        read_dataset(
            &self.input,
            &ReadOptions {
                delimiter,
                has_header: !self.no_header,
                label_column: self.label.clone(),
            },
        )
    }
}

#[derive(Args)]
struct GapArgs {
    /// Largest k on the solution path
    #[arg(long, default_value_t = 10)]
    kmax: usize,

    /// Bootstrap replicates for the reference
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,

    /// Standard error multiplier in the gap rule
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args)]
struct SeedArg {
    /// Master random seed
    #[arg(long, env = "POOLEDSCALE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CacheArg {
    /// Directory for cached bootstrap references
    #[arg(long, env = "POOLEDSCALE_CACHE_DIR", value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ScaleArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Scaling method
    #[arg(long, default_value = "psd", value_parser = parse_method)]
    method: Method,

    /// Scaled matrix destination (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Per-variable decision report destination
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,

    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    cache: CacheArg,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Clustering engine
    #[arg(long, default_value = "kmeans", value_parser = parse_engine)]
    engine: Engine,

    /// Number of clusters; omit with a hierarchical engine to print the
    /// full merge list instead
    #[arg(long)]
    k: Option<usize>,

    /// Random starts for kmeans
    #[arg(long, default_value_t = Engine::DEFAULT_STARTS)]
    starts: usize,

    /// Iteration cap per kmeans start
    #[arg(long, default_value_t = Engine::DEFAULT_MAX_ITERS)]
    max_iters: usize,

    /// Labels (or merge list) destination (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct AriArgs {
    /// Predicted labels, one per line
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,

    /// Reference labels, one per line
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
}

#[derive(Args)]
struct GapReportArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Pooled method selecting the criterion (psd or pmad)
    #[arg(long, default_value = "psd", value_parser = parse_method)]
    method: Method,

    /// Report destination (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    cache: CacheArg,
}

#[derive(Args)]
struct RatiosArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Pooled method selecting the criterion (psd or pmad)
    #[arg(long, default_value = "psd", value_parser = parse_method)]
    method: Method,

    /// Table destination (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    cache: CacheArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Cell grid: figure2, figure2-outliers, or table2
    #[arg(long, default_value = "figure2")]
    preset: String,

    /// Replicates per cell
    #[arg(long, default_value_t = 20)]
    reps: usize,

    /// Comma-separated scaling methods
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "none,sd,range,mad,psd,pmad",
        value_parser = parse_method
    )]
    scalers: Vec<Method>,

    /// Comma-separated engines
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "kmeans,hc-ward",
        value_parser = parse_engine
    )]
    engines: Vec<Engine>,

    /// Override the preset's points per cluster
    #[arg(long, value_name = "N")]
    cluster_size: Option<usize>,

    /// Random starts for kmeans engines
    #[arg(long, default_value_t = Engine::DEFAULT_STARTS)]
    starts: usize,

    /// Iteration cap per kmeans start
    #[arg(long, default_value_t = Engine::DEFAULT_MAX_ITERS)]
    max_iters: usize,

    /// Results table destination (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Aggregated summary destination
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,

    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    seed: SeedArg,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn scale_config(gap: &GapArgs, seed: &SeedArg) -> ScaleConfig {
    ScaleConfig {
        kmax: gap.kmax,
        b: gap.b,
        c: gap.c,
        seed: seed.seed,
    }
}

fn report_text(report: &ScaleReport) -> String {
    let mut out = format!("method: {}\n", report.method);
    if report.method.is_pooled() {
        out.push_str(&format!(
            "kmax: {}  B: {}  c: {}  seed: {}\n",
            report.config.kmax, report.config.b, report.config.c, report.config.seed
        ));
    }
    out.push_str("variable\tk_star\tscale\tratio\tflags\n");
    for d in &report.decisions {
        let k_star = d.k_star.map_or("-".to_string(), |k| k.to_string());
        let ratio = d.ratio.map_or("-".to_string(), |r| fmt_sig(r, 12));
        let flags = if d.flags.any() {
            d.flags.list().join(",")
        } else {
            "-".to_string()
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            d.variable_id,
            k_star,
            fmt_sig(d.scale, 12),
            ratio,
            flags
        ));
    }
    out
}

fn run_scale(args: &ScaleArgs) -> Result<()> {
    let dataset = args.input.read()?;
    let config = scale_config(&args.gap, &args.seed);
    let (scaled, report) = scale_dataset(
        &dataset.matrix,
        &dataset.names,
        args.method,
        &config,
        args.cache.cache_dir.as_deref(),
    )?;
    emit(args.out.as_deref(), &matrix_csv(&dataset.names, &scaled))?;
    if let Some(path) = &args.report {
        write_atomic(path, &report_text(&report))?;
    }
    Ok(())
}

fn run_cluster(args: &ClusterArgs) -> Result<()> {
    let dataset = args.input.read()?;
    let engine = match args.engine {
        Engine::Kmeans { .. } => Engine::Kmeans {
            starts: args.starts,
            max_iters: args.max_iters,
        },
        other => other,
    };
    match (args.k, engine) {
        (Some(k), engine) => {
            let partition = run_engine(&dataset.matrix, engine, k, args.seed.seed)?;
            let mut out = String::new();
            for label in &partition.labels {
                out.push_str(&format!("{label}\n"));
            }
            emit(args.out.as_deref(), &out)
        }
        (None, Engine::Hc(linkage)) => {
            let dist = pairwise_distances(&dataset.matrix, Metric::Euclidean);
            let tree = hclust(&dist, linkage)?;
            let mut out = String::from("step,left,right,height\n");
            for (step, merge) in tree.merges.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    step,
                    merge.left,
                    merge.right,
                    fmt_sig(merge.height, 12)
                ));
            }
            emit(args.out.as_deref(), &out)
        }
        (None, _) => Err(Error::invalid_argument(
            "--k is required unless a hierarchical engine emits its merge list",
        )),
    }
}

fn read_labels(path: &Path) -> Result<Partition> {
    let text = std::fs::read_to_string(path)?;
    let labels: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    label_partition(&labels)
}

fn run_ari(args: &AriArgs) -> Result<()> {
    let pred = read_labels(&args.pred)?;
    let truth = read_labels(&args.truth)?;
    let ari = adjusted_rand_index(&pred, &truth)?;
    println!("{}", fmt_sig(ari, 12));
    Ok(())
}

fn pooled_criterion(method: Method) -> Result<Method> {
    if method.is_pooled() {
        Ok(method)
    } else {
        Err(Error::invalid_argument(format!(
            "method must be psd or pmad, got {method}"
        )))
    }
}

fn run_gap_report(args: &GapReportArgs) -> Result<()> {
    let method = pooled_criterion(args.method)?;
    let dataset = args.input.read()?;
    let n = dataset.matrix.nrows();
    let reference = GapReference::load_or_build(
        args.cache.cache_dir.as_deref(),
        n,
        args.gap.kmax.min(n),
        args.gap.b,
        method.criterion().unwrap(),
        args.seed.seed,
    )?;
    let mut out = String::from("variable,k,log_w,gap,s,k_star,saturated\n");
    for (j, name) in dataset.names.iter().enumerate() {
        let column = dataset.matrix.column(j).to_vec();
        match variable_gap_curve(&column, &reference) {
            Ok((curve, _)) => {
                let (k_star, saturated) = select_k_gap(&curve, &reference, args.gap.c);
                for k in 1..=curve.gap.len() {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        name,
                        k,
                        fmt_sig(curve.log_w[k - 1], 12),
                        fmt_sig(curve.gap[k - 1], 12),
                        fmt_sig(reference.s[k - 1], 12),
                        k_star,
                        saturated
                    ));
                }
            }
            Err(Error::InvalidData(_)) => {
                out.push_str(&format!("{name},1,,,,1,false\n"));
            }
            Err(e) => return Err(e),
        }
    }
    emit(args.out.as_deref(), &out)
}

fn run_ratios(args: &RatiosArgs) -> Result<()> {
    let method = pooled_criterion(args.method)?;
    let dataset = args.input.read()?;
    let config = scale_config(&args.gap, &args.seed);
    let (_, report) = scale_dataset(
        &dataset.matrix,
        &dataset.names,
        method,
        &config,
        args.cache.cache_dir.as_deref(),
    )?;
    let mut out = String::from("variable,ratio\n");
    for (name, ratio) in scale_ratios(&report)? {
        out.push_str(&format!("{},{}\n", name, fmt_sig(ratio, 12)));
    }
    emit(args.out.as_deref(), &out)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let mut grid = preset(&args.preset)?;
    if let Some(size) = args.cluster_size {
        for config in &mut grid {
            config.cluster_size = size;
        }
    }
    let engines: Vec<Engine> = args
        .engines
        .iter()
        .map(|&engine| match engine {
            Engine::Kmeans { .. } => Engine::Kmeans {
                starts: args.starts,
                max_iters: args.max_iters,
            },
            other => other,
        })
        .collect();
    let gap = ScaleConfig {
        kmax: args.gap.kmax,
        b: args.gap.b,
        c: args.gap.c,
        seed: 0,
    };
    let table = run_design(
        &grid,
        &args.scalers,
        &engines,
        args.reps,
        args.seed.seed,
        &gap,
    )?;
    emit(args.out.as_deref(), &table.to_csv())?;
    if let Some(path) = &args.summary {
        write_atomic(path, &table.summary_csv())?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scale(args) => run_scale(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Ari(args) => run_ari(args),
        Command::GapReport(args) => run_gap_report(args),
        Command::Ratios(args) => run_ratios(args),
        Command::Simulate(args) => run_simulate(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
