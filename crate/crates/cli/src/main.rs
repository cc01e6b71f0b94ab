//! `lrr`: solve, generate, run experiment grids, segment, analyze and
//! certify from the command line.
//!
//! Exit status is nonzero only for I/O, parse and configuration errors;
//! unsuccessful recoveries and non-converged solves are reported in the
//! output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lrr::experiment::{self, BetaSweepConfig, ExperimentReport, PhaseTransitionConfig, SegmentConfig, Truth};
use lrr::generate::{generate, outliers_for_fraction, Construction, GenSpec, OutlierStd};
use lrr::io;
use lrr::outlier;
use lrr::recovery;
use lrr::solver::{SolverConfig, SolverForm};

#[derive(Parser)]
#[command(name = "lrr", version, about = "Low-rank representation: subspace segmentation and outlier detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the LRR program for a data matrix.
    Solve(SolveArgs),
    /// Generate a synthetic instance with its ground-truth sidecar.
    Gen(GenArgs),
    /// Success rate of exact recovery over an outlier-fraction × λ grid.
    PhaseTransition(PhaseArgs),
    /// Mean RWD parameter β against outlier magnitude.
    BetaSweep(BetaArgs),
    /// Solve, flag outliers and cluster the remaining columns.
    Segment(SegmentArgs),
    /// Recovery-condition quantities of an instance.
    Analyze(AnalyzeArgs),
    /// Build and check the dual certificate of an instance.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    RowSpace,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Csv,
    Mtx,
}

impl MatrixFormat {
    fn ext(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Mtx => "mtx",
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    mu0: f64,
    #[arg(long, default_value_t = 1.03)]
    rho: f64,
    #[arg(long, default_value_t = 1e10)]
    mu_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "row-space")]
    form: FormArg,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            lambda: self.lambda,
            mu0: self.mu0,
            rho: self.rho,
            mu_max: self.mu_max,
            tol_primal: self.tol,
            max_iters: self.max_iters,
            form: match self.form {
                FormArg::RowSpace => SolverForm::RowSpace,
                FormArg::Full => SolverForm::Full,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct SpecArgs {
    #[arg(long, default_value_t = 500)]
    ambient_dim: usize,
    #[arg(long, default_value_t = 5)]
    subspaces: usize,
    #[arg(long, default_value_t = 5)]
    subspace_dim: usize,
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Outlier standard deviation; `matched` uses the mean absolute sample entry.
    #[arg(long, default_value = "matched")]
    outlier_std: String,
    #[arg(long, value_enum, default_value = "rotation-chain")]
    construction: ConstructionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    RotationChain,
    IndependentRandom,
}

impl SpecArgs {
    fn spec(&self, num_outliers: usize, seed: u64) -> Result<GenSpec> {
        let outlier_std = if self.outlier_std == "matched" {
            OutlierStd::Matched
        } else {
            OutlierStd::Explicit(
                self.outlier_std
                    .parse()
                    .with_context(|| format!("--outlier-std: expected `matched` or a number, got {:?}", self.outlier_std))?,
            )
        };
        let spec = GenSpec {
            ambient_dim: self.ambient_dim,
            num_subspaces: self.subspaces,
            subspace_dim: self.subspace_dim,
            samples_per_subspace: self.samples,
            num_outliers,
            outlier_std,
            construction: match self.construction {
                ConstructionArg::RotationChain => Construction::RotationChain,
                ConstructionArg::IndependentRandom => Construction::IndependentRandom,
            },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Data matrix (`.csv` or `.mtx`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: MatrixFormat,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Output matrix path; the sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with = "gamma")]
    outliers: Option<usize>,
    /// Outlier fraction; sets the outlier count from the authentic count.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Args)]
struct GridOutput {
    /// Report path; the CSV grid is written next to it with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: one per core).
    #[arg(long, env = experiment::WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda_log")]
    lambdas: Option<Vec<f64>>,
    /// Logarithmic λ grid as `lo:hi:count`.
    #[arg(long)]
    lambda_log: Option<String>,
    #[command(flatten)]
    output: GridOutput,
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BetaArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,1,2")]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[command(flatten)]
    output: GridOutput,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Args)]
struct SegmentArgs {
    /// Data matrix; a sidecar with the same stem enables ACC and AUC.
    #[arg(long)]
    input: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[arg(long)]
    out_dir: PathBuf,
    /// Seed of the k-means restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = outlier::DEFAULT_DELTA_REL)]
    delta: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Instance matrix with its sidecar.
    #[arg(long)]
    input: PathBuf,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Default: the recommended λ of the instance.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => io::write_json(p, value).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_input(path: &Path) -> Result<lrr::linalg::DenseMatrix> {
    io::read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let cfg = a.solver.config()?;
    let x = read_input(&a.input)?;
    let (sol, summary) = experiment::solve_summarized(x.as_ref(), &cfg)?;
    if !summary.converged {
        log::warn!("solver stopped at the iteration cap ({} iterations)", summary.iterations);
    }
    create_dir(&a.out_dir)?;
    let ext = a.format.ext();
    io::write_matrix(&a.out_dir.join(format!("z.{ext}")), sol.z.as_ref())?;
    io::write_matrix(&a.out_dir.join(format!("c.{ext}")), sol.c.as_ref())?;
    emit_json(Some(&a.out_dir.join("summary.json")), &summary)
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let template = a.spec.spec(0, a.seed)?;
    let outliers = match (a.outliers, a.gamma) {
        (Some(k), _) => k,
        (None, Some(g)) => outliers_for_fraction(template.num_authentic(), g)?,
        (None, None) => 0,
    };
    let spec = GenSpec { num_outliers: outliers, ..template };
    let inst = generate(&spec)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    io::save_instance(&a.out, &inst, Some(&spec)).with_context(|| format!("writing {}", a.out.display()))
}

fn parse_log_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("--lambda-log: expected lo:hi:count, got {text:?}");
    }
    let lo: f64 = parts[0].parse().context("--lambda-log lo")?;
    let hi: f64 = parts[1].parse().context("--lambda-log hi")?;
    let n: usize = parts[2].parse().context("--lambda-log count")?;
    if !(lo > 0.0 && hi >= lo && n > 0) {
        bail!("--lambda-log: need 0 < lo <= hi and count > 0");
    }
    Ok(experiment::log_grid(lo, hi, n))
}

fn write_report(out: &Path, report: &ExperimentReport) -> Result<()> {
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    emit_json(Some(out), report)?;
    let grid = out.with_extension("csv");
    let f = fs::File::create(&grid).with_context(|| format!("writing {}", grid.display()))?;
    report.write_grid_csv(f)?;
    Ok(())
}

fn cmd_phase_transition(a: &PhaseArgs) -> Result<()> {
    let lambdas = match (&a.lambdas, &a.lambda_log) {
        (_, Some(spec)) => parse_log_grid(spec)?,
        (Some(l), None) => l.clone(),
        (None, None) => vec![a.solver.lambda],
    };
    let cfg = PhaseTransitionConfig {
        gammas: a.gammas.clone(),
        lambdas,
        trials: a.output.trials,
        seed: a.output.seed,
        base: a.spec.spec(0, 0)?,
        solver: a.solver.config()?,
        thresholds: recovery::RecoveryThresholds::default(),
    };
    let report = experiment::phase_transition(&cfg, experiment::worker_count(a.output.workers))?;
    write_report(&a.output.out, &report)
}

fn cmd_beta_sweep(a: &BetaArgs) -> Result<()> {
    let cfg = BetaSweepConfig {
        ratios: a.ratios.clone(),
        gamma: a.gamma,
        trials: a.output.trials,
        seed: a.output.seed,
        base: a.spec.spec(0, 0)?,
    };
    let report = experiment::beta_sweep(&cfg, experiment::worker_count(a.output.workers))?;
    write_report(&a.output.out, &report)
}

fn cmd_segment(a: &SegmentArgs) -> Result<()> {
    let (x, sidecar) = io::load_matrix_with_sidecar(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let truth = match sidecar {
        Some(s) => Some(Truth::of(&s.instance(x.clone())?)),
        None => None,
    };
    let cfg = SegmentConfig {
        k: a.k,
        solver: a.solver.config()?,
        seed: a.seed,
        delta_rel: a.delta,
        rank_rel_tol: recovery::RecoveryThresholds::default().rank_rel_tol,
    };
    let report = experiment::segment(x.as_ref(), &cfg, truth.as_ref())?;
    create_dir(&a.out_dir)?;
    let mut labels = String::from("column,cluster\n");
    for (i, l) in report.labels.iter().enumerate() {
        match l {
            Some(c) => labels.push_str(&format!("{i},{c}\n")),
            None => labels.push_str(&format!("{i},outlier\n")),
        }
    }
    fs::write(a.out_dir.join("labels.csv"), labels)?;
    if let Some(t) = &truth {
        if let Ok(roc) = outlier::roc_auc(&report.scores, &t.support0) {
            outlier::write_roc_csv(&roc, fs::File::create(a.out_dir.join("roc.csv"))?)?;
        }
    }
    emit_json(Some(&a.out_dir.join("report.json")), &report)
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let inst = io::load_instance(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    emit_json(a.out.as_deref(), &recovery::analyze(&inst)?)
}

fn cmd_certify(a: &CertifyArgs) -> Result<()> {
    let inst = io::load_instance(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let lambda = match a.lambda {
        Some(l) => l,
        None => recovery::analyze(&inst)?.lambda_rec,
    };
    emit_json(a.out.as_deref(), &experiment::certify(&inst, lambda)?)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::PhaseTransition(a) => cmd_phase_transition(&a),
        Command::BetaSweep(a) => cmd_beta_sweep(&a),
        Command::Segment(a) => cmd_segment(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Certify(a) => cmd_certify(&a),
    }
}
