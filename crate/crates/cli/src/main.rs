use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mcc::ci::{mcc_ci, CiMethod};
use mcc::covariates::{integer_valued, residualize_matrix, stratified_mcc_matrix, CovariateMatrix};
use mcc::engine::{mcc_matrix, AnalysisConfig, ContinuityCorrection, RowReport, SmallStrata};
use mcc::error::Error;
use mcc::model::{FeatureMatrix, ResponseVector, StrataAssignment};
use mcc::oracle::{exhaustive_pvalues, monte_carlo_feature, monte_carlo_matrix, OracleResult};
use mcc::referent::{mcc1_all_row, mcc1_row, select_referent};
use mcc::sim::{power_experiment, timing_benchmark, type1_experiment, ScenarioId, ScenarioSpec};

mod input;
mod output;

use input::{read_columns, read_matrix, MatrixInput};
use output::{Manifest, Report};

/// Moment-corrected permutation p-values for trend tests.
#[derive(Parser)]
#[command(author, version, about)]
struct Cli {
    /// Worker threads; defaults to the available parallelism
    #[arg(long, global = true, env = "MCC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test every feature row against the response
    Run(RunArgs),
    /// Simulated type I error or power for a scenario
    Sim(SimArgs),
    /// Time the batch engine on random data
    Bench(BenchArgs),
    /// Confidence intervals for the slope of the response on each feature
    Ci(CiArgs),
    /// Exhaustive or Monte Carlo permutation p-values
    Oracle(OracleArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Feature matrix: first column feature ids, header row sample ids
    #[arg(long)]
    matrix: PathBuf,

    /// Response file: sample id and one value column
    #[arg(long)]
    response: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMethod {
    Mcc,
    Mcc1,
    Mcc1All,
}

impl RunMethod {
    fn as_str(self) -> &'static str {
        match self {
            RunMethod::Mcc => "mcc",
            RunMethod::Mcc1 => "mcc1",
            RunMethod::Mcc1All => "mcc1-all",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Covariates to residualize on: sample id and one column per covariate
    #[arg(long)]
    covariates: Option<PathBuf>,

    /// Strata file: sample id and a stratum label
    #[arg(long, conflicts_with = "covariates")]
    strata: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "mcc")]
    method: RunMethod,

    /// `auto`, `off`, or a non-negative offset on the raw statistic scale
    #[arg(long, default_value = "auto")]
    continuity: String,

    /// Refuse strata too small for the closed-form moments instead of enumerating them
    #[arg(long)]
    reject_small_strata: bool,

    /// Append Monte Carlo oracle columns using this many permutations
    #[arg(long)]
    verify: Option<u64>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Significant digits for printed numbers
    #[arg(long, default_value_t = 6)]
    precision: usize,

    /// Print full double precision
    #[arg(long)]
    raw: bool,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    scenario: String,

    #[arg(long, default_value_t = 500)]
    n: usize,

    #[arg(long, default_value_t = 20_000)]
    replications: usize,

    /// Significance levels, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001")]
    alpha: Vec<f64>,

    /// Slopes for the power scenarios, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1,1.5")]
    betas: Vec<f64>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Feature counts, comma separated powers of two
    #[arg(long, value_delimiter = ',', default_value = "16384")]
    m: Vec<usize>,

    /// Sample sizes, comma separated powers of two
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    n: Vec<usize>,

    #[arg(long, default_value_t = 3)]
    repeats: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalMethod {
    Mcc,
    Mcc1,
    Exhaustive,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Confidence levels, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    level: Vec<f64>,

    #[arg(long, value_enum, default_value = "mcc")]
    method: IntervalMethod,

    /// Only this feature
    #[arg(long)]
    feature: Option<String>,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long)]
    strata: Option<PathBuf>,

    /// Enumerate every arrangement instead of sampling
    #[arg(long)]
    exhaustive: bool,

    #[arg(long, default_value_t = 100_000)]
    draws: u64,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

const RUN_COLUMNS: [&str; 11] = [
    "feature_id",
    "n",
    "r_obs",
    "skewness",
    "excess_kurtosis",
    "fit_kind",
    "p_left",
    "p_right",
    "p_two",
    "p_double",
    "flags",
];

fn parse_continuity(s: &str) -> Result<ContinuityCorrection> {
    Ok(match s {
        "auto" => ContinuityCorrection::Auto,
        "off" | "none" => ContinuityCorrection::Off,
        v => ContinuityCorrection::Offset(v.parse().with_context(|| format!("invalid continuity setting '{v}'"))?),
    })
}

fn flag_for(e: &Error) -> &'static str {
    match e {
        Error::Degenerate(_) => "untestable",
        Error::InsufficientSamples { .. } => "too_few_samples",
        Error::NoRealSolution { .. } => "no_fit",
        Error::Precondition(_) => "precondition",
        _ => "error",
    }
}

struct Loaded {
    matrix: MatrixInput,
    y: Vec<f64>,
}

fn load(data: &DataArgs) -> Result<Loaded> {
    let matrix = read_matrix(&data.matrix)?;
    let y = read_columns(&data.response, &matrix.samples, &data.matrix)?.single_numeric()?;
    Ok(Loaded { matrix, y })
}

fn feature_matrix(m: &MatrixInput) -> Result<FeatureMatrix<f64>> {
    Ok(FeatureMatrix::from_named_rows(&m.rows, m.feature_ids.clone())?)
}

fn run(args: RunArgs) -> Result<()> {
    let Loaded { matrix, y } = load(&args.data)?;
    let n = matrix.samples.len();
    let continuity = parse_continuity(&args.continuity)?;
    let config = AnalysisConfig {
        continuity,
        small_strata: if args.reject_small_strata { SmallStrata::Reject } else { SmallStrata::Enumerate },
        precision: args.precision,
    };
    config.validate()?;
    if args.strata.is_some() && args.method != RunMethod::Mcc {
        bail!("--strata is only supported with --method mcc");
    }
    let mut manifest = Manifest::new("run");
    manifest
        .input("matrix", &args.data.matrix)
        .input("response", &args.data.response)
        .set("method", args.method.as_str())
        .set("continuity", &args.continuity)
        .set("reject_small_strata", args.reject_small_strata)
        .set("verify", args.verify.map_or("none".into(), |b| b.to_string()))
        .set("precision", args.precision)
        .set("raw", args.raw);
    let mut x = feature_matrix(&matrix)?;
    let mut y = y;
    let strata = match &args.strata {
        Some(p) => {
            manifest.input("strata", p);
            let keys = read_columns(p, &matrix.samples, &args.data.matrix)?.single_text()?;
            Some(StrataAssignment::from_keys(&keys)?)
        }
        None => None,
    };
    if let Some(p) = &args.covariates {
        manifest.input("covariates", p);
        let cols = read_columns(p, &matrix.samples, &args.data.matrix)?;
        let columns = (0..cols.names.len()).map(|c| cols.numeric(c)).collect::<Result<Vec<_>>>()?;
        let q = columns.len();
        if q as f64 / n as f64 > 0.05 {
            eprintln!("warning: {q} covariates for {n} samples; residual exchangeability may not hold");
        }
        let z = CovariateMatrix::from_columns(&columns).map_err(|e| match e {
            Error::RankDeficient { columns: bad } => {
                let names: Vec<&str> = bad.iter().map(|&i| cols.names[i].as_str()).collect();
                anyhow::anyhow!("{}: covariates are linearly dependent: {}", p.display(), names.join(", "))
            }
            e => e.into(),
        })?;
        x = residualize_matrix(&x, &z)?;
        y = z.residualize(&y)?;
    }
    let response = ResponseVector::new(y.clone())?;
    let reports: Vec<mcc::error::Result<RowReport<f64>>> = match &strata {
        Some(s) => stratified_mcc_matrix(&x, &y, s, &config)?,
        None => mcc_matrix(&x, &response, &config)?,
    };
    let referent = select_referent(&y);
    let reports: Vec<mcc::error::Result<RowReport<f64>>> = match args.method {
        RunMethod::Mcc => reports,
        method => reports
            .into_par_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r?;
                let row = x.row(i).to_vec();
                r.pvalues = match method {
                    RunMethod::Mcc1 => mcc1_row(&row, &y, referent, &config)?,
                    _ => mcc1_all_row(&row, &y, &config)?,
                };
                Ok(r)
            })
            .collect(),
    };
    let oracle: Option<Vec<mcc::error::Result<OracleResult>>> = match args.verify {
        None => None,
        Some(draws) => Some(match &strata {
            Some(s) => (0..x.nrows())
                .into_par_iter()
                .map(|i| monte_carlo_feature(&x.row(i).to_vec(), &y, draws, args.seed, i as u64, Some(s)))
                .collect(),
            None => monte_carlo_matrix(&x, &response, draws, args.seed)?,
        }),
    };

    let mut out = Report::open(args.output.as_deref(), args.precision, args.raw)?;
    out.header(args.verify.map(|_| args.seed), &manifest)?;
    let mut columns: Vec<&str> = RUN_COLUMNS.to_vec();
    if oracle.is_some() {
        columns.extend(["p_mc", "se_mc"]);
    }
    out.row(&columns)?;
    for (i, report) in reports.iter().enumerate() {
        let auto = strata.is_some() && integer_valued(&matrix.rows[i], &y);
        let offset = config.continuity_offset(auto);
        let mut fields = vec![x.feature_ids()[i].clone(), n.to_string()];
        match report {
            Ok(r) => {
                let p = &r.pvalues;
                let mut flags = Vec::new();
                if offset > 0.0 {
                    flags.push("continuity");
                }
                if !r.moments.is_consistent() {
                    flags.push("moments_inconsistent");
                }
                fields.extend([
                    out.num(p.r_obs),
                    out.num(r.moments.skewness),
                    out.num(r.moments.excess_kurtosis),
                    p.fit_kind.to_string(),
                    out.num(p.p_left),
                    out.num(p.p_right),
                    out.num(p.p_two),
                    out.num(p.p_double),
                    if flags.is_empty() { "ok".into() } else { flags.join(";") },
                ]);
            }
            Err(e) => {
                fields.extend(std::iter::repeat_n("NA".to_string(), 8));
                fields.push(flag_for(e).into());
            }
        }
        if let Some(o) = &oracle {
            match &o[i] {
                Ok(o) => {
                    let (p, se) = if o.p_left <= o.p_right { (o.p_left, o.se_left) } else { (o.p_right, o.se_right) };
                    fields.extend([out.num((2.0 * p).min(1.0)), out.num(2.0 * se)]);
                }
                Err(_) => fields.extend(["NA".to_string(), "NA".to_string()]),
            }
        }
        out.row(&fields)?;
    }
    out.finish()
}

fn sim(args: SimArgs) -> Result<()> {
    let id: ScenarioId = args.scenario.parse()?;
    let mut manifest = Manifest::new("sim");
    manifest.set("scenario", id).set("n", args.n).set("replications", args.replications);
    let spec = ScenarioSpec::null(id, args.n, args.seed);
    if id.is_power() {
        let alpha = match args.alpha.as_slice() {
            [a] => *a,
            [a, ..] => {
                eprintln!("warning: power uses only the first level, {a}");
                *a
            }
            [] => bail!("no significance level given"),
        };
        manifest.set("alpha", alpha).set("betas", format!("{:?}", args.betas));
        let rows = power_experiment(&spec, &args.betas, alpha, args.replications)?;
        let mut out = Report::open(args.output.as_deref(), 6, false)?;
        out.header(Some(args.seed), &manifest)?;
        out.row(&["scenario", "n", "alpha", "beta", "power_two", "power_double", "se_two", "se_double"])?;
        for r in rows {
            out.row(&[
                id.to_string(),
                args.n.to_string(),
                out.num(alpha),
                out.num(r.beta),
                out.num(r.power_two),
                out.num(r.power_double),
                out.num(r.se_two),
                out.num(r.se_double),
            ])?;
        }
        return out.finish();
    }
    manifest.set("alpha", format!("{:?}", args.alpha));
    let report = type1_experiment(&spec, args.replications, &args.alpha)?;
    let mut out = Report::open(args.output.as_deref(), 6, false)?;
    out.header(Some(args.seed), &manifest)?;
    out.comment(&format!("replications={} skipped={}", report.replications, report.skipped))?;
    out.row(&["scenario", "n", "method", "tail", "alpha", "rejections", "rate", "log10_ratio", "log10_sd"])?;
    for r in &report.rows {
        out.row(&[
            id.to_string(),
            args.n.to_string(),
            r.method.as_str().to_string(),
            r.tail.as_str().to_string(),
            out.num(r.alpha),
            r.rejections.to_string(),
            out.num(r.rate),
            out.num(r.log10_ratio),
            out.num(r.log10_sd),
        ])?;
    }
    out.finish()
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut manifest = Manifest::new("bench");
    manifest.set("m", format!("{:?}", args.m)).set("n", format!("{:?}", args.n)).set("repeats", args.repeats);
    let report = timing_benchmark(&args.m, &args.n, args.repeats, args.seed)?;
    let mut out = Report::open(args.output.as_deref(), 6, false)?;
    out.header(Some(args.seed), &manifest)?;
    out.comment(&format!("fit: time = {:.6e} * m * n", report.seconds_per_entry))?;
    out.row(&["m", "n", "seconds", "fitted", "deviation"])?;
    for c in &report.cells {
        let fitted = report.seconds_per_entry * (c.m * c.n) as f64;
        out.row(&[c.m.to_string(), c.n.to_string(), out.num(c.seconds), out.num(fitted), out.num(c.deviation)])?;
    }
    out.finish()
}

fn ci(args: CiArgs) -> Result<()> {
    let Loaded { matrix, y } = load(&args.data)?;
    let method = match args.method {
        IntervalMethod::Mcc => CiMethod::Mcc,
        IntervalMethod::Mcc1 => CiMethod::Mcc1,
        IntervalMethod::Exhaustive => CiMethod::Exhaustive,
    };
    let mut manifest = Manifest::new("ci");
    manifest
        .input("matrix", &args.data.matrix)
        .input("response", &args.data.response)
        .set("method", method.as_str())
        .set("level", format!("{:?}", args.level))
        .set("feature", args.feature.as_deref().unwrap_or("all"));
    let selected: Vec<usize> = match &args.feature {
        Some(f) => vec![matrix
            .feature_ids
            .iter()
            .position(|id| id == f)
            .with_context(|| format!("feature '{f}' not found in {}", args.data.matrix.display()))?],
        None => (0..matrix.rows.len()).collect(),
    };
    let mut out = Report::open(args.output.as_deref(), 6, false)?;
    out.header(None, &manifest)?;
    out.row(&["feature_id", "level", "method", "estimate", "lower", "upper", "warnings"])?;
    for i in selected {
        for &level in &args.level {
            let id = matrix.feature_ids[i].clone();
            match mcc_ci(&matrix.rows[i], &y, level, method) {
                Ok(c) => {
                    let warnings = if c.warnings.is_empty() { "none".to_string() } else { c.warnings.join("; ") };
                    out.row(&[
                        id,
                        out.num(level),
                        method.as_str().to_string(),
                        out.num(c.estimate),
                        out.num(c.lower),
                        out.num(c.upper),
                        warnings,
                    ])?;
                }
                Err(e) => out.row(&[id, out.num(level), method.as_str().to_string(), "NA".into(), "NA".into(), "NA".into(), e.to_string()])?,
            }
        }
    }
    out.finish()
}

fn oracle(args: OracleArgs) -> Result<()> {
    let Loaded { matrix, y } = load(&args.data)?;
    let mut manifest = Manifest::new("oracle");
    manifest
        .input("matrix", &args.data.matrix)
        .input("response", &args.data.response)
        .set("exhaustive", args.exhaustive)
        .set("draws", args.draws);
    let strata = match &args.strata {
        Some(p) => {
            manifest.input("strata", p);
            let keys = read_columns(p, &matrix.samples, &args.data.matrix)?.single_text()?;
            Some(StrataAssignment::from_keys(&keys)?)
        }
        None => None,
    };
    let results: Vec<mcc::error::Result<OracleResult>> = (0..matrix.rows.len())
        .into_par_iter()
        .map(|i| {
            let row = &matrix.rows[i];
            if args.exhaustive {
                exhaustive_pvalues(row, &y, strata.as_ref())
            } else {
                monte_carlo_feature(row, &y, args.draws, args.seed, i as u64, strata.as_ref())
            }
        })
        .collect();
    let mut out = Report::open(args.output.as_deref(), 6, false)?;
    out.header(if args.exhaustive { None } else { Some(args.seed) }, &manifest)?;
    out.row(&[
        "feature_id",
        "r_obs",
        "p_left",
        "p_right",
        "p_double",
        "mid_p_left",
        "mid_p_right",
        "se_left",
        "se_right",
        "draws",
        "exhaustive",
    ])?;
    for (id, r) in matrix.feature_ids.iter().zip(results) {
        match r {
            Ok(o) => out.row(&[
                id.clone(),
                out.num(o.r_obs),
                out.num(o.p_left),
                out.num(o.p_right),
                out.num(o.p_double),
                out.num(o.mid_p_left),
                out.num(o.mid_p_right),
                out.num(o.se_left),
                out.num(o.se_right),
                o.draws.to_string(),
                o.exhaustive.to_string(),
            ])?,
            Err(e) => {
                eprintln!("warning: feature {id}: {e}");
                let mut fields = vec![id.clone()];
                fields.extend(std::iter::repeat_n("NA".to_string(), 10));
                out.row(&fields)?;
            }
        }
    }
    out.finish()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("cannot configure worker threads")?;
    }
    match cli.command {
        Command::Run(a) => run(a),
        Command::Sim(a) => sim(a),
        Command::Bench(a) => bench(a),
        Command::Ci(a) => ci(a),
        Command::Oracle(a) => oracle(a),
    }
}
