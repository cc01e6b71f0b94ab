//! Experiment drivers behind the command-line tool: phase-transition grids,
//! RWD sweeps, the segmentation pipeline, recovery diagnostics and
//! certificate checks.
//!
//! Grid cells run on a rayon pool. Every cell draws its instances from seeds
//! derived from the master seed and the cell index, so the worker count never
//! changes a result; only the `seconds` fields vary between runs.

use std::io::Write;
use std::time::Instant;

use faer::MatRef;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{self, OracleStructure};
use crate::error::{LrrError, Result};
use crate::generate::{derive_seed, generate, outliers_for_fraction, GenSpec, ProblemInstance};
use crate::linalg::{self, ColumnSupport};
use crate::outlier::{self, DEFAULT_DELTA_REL};
use crate::recovery::{self, RecoveryThresholds};
use crate::segmentation;
use crate::solver::{solve_lrr, solve_oracle, LrrSolution, SolverConfig};

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "LRR_WORKERS";

/// Explicit count, else `LRR_WORKERS`, else one worker per core.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_cells<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LrrError::InvalidInput(format!("worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}

/// Solver outcome without the matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub rows: usize,
    pub cols: usize,
    pub config: SolverConfig,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub split_residual: f64,
    pub objective: f64,
    pub rank_z: usize,
    pub rowspace_leakage: f64,
    pub seconds: f64,
}

/// Solves and summarizes; the rank of `Z*` uses the recovery threshold.
pub fn solve_summarized(x: MatRef<'_, f64>, config: &SolverConfig) -> Result<(LrrSolution, SolveSummary)> {
    let start = Instant::now();
    let sol = solve_lrr(x, config)?;
    let seconds = start.elapsed().as_secs_f64();
    let sv = linalg::singular_values(sol.z.as_ref())?;
    let summary = SolveSummary {
        rows: x.nrows(),
        cols: x.ncols(),
        config: config.clone(),
        iterations: sol.iterations,
        converged: sol.converged,
        primal_residual: sol.final_residuals.0,
        split_residual: sol.final_residuals.1,
        objective: sol.objective,
        rank_z: linalg::numerical_rank(&sv, RecoveryThresholds::default().rank_rel_tol),
        rowspace_leakage: recovery::rowspace_leakage(x, sol.z.as_ref())?,
        seconds,
    };
    Ok((sol, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// One generated-and-solved instance inside a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rowspace_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rowspace_leakage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialOutcome {
    fn failed(seed: u64, err: &LrrError) -> Self {
        Self {
            seed,
            success: false,
            converged: None,
            iterations: None,
            rowspace_error: None,
            support_exact: None,
            rowspace_leakage: None,
            beta: None,
            beta_lower: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    /// Grid coordinates, one per report axis.
    pub coords: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_beta_lower: Option<f64>,
    pub outcomes: Vec<TrialOutcome>,
    pub seconds: f64,
}

impl CellResult {
    fn new(index: usize, coords: Vec<f64>, seed: u64, outcomes: Vec<TrialOutcome>, seconds: f64) -> Self {
        let successes = outcomes.iter().filter(|o| o.success).count();
        let mean = |f: fn(&TrialOutcome) -> Option<f64>| {
            let v: Vec<f64> = outcomes.iter().filter_map(f).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Self {
            index,
            coords,
            seed,
            trials: outcomes.len(),
            successes,
            success_rate: successes as f64 / outcomes.len().max(1) as f64,
            mean_beta: mean(|o| o.beta),
            mean_beta_lower: mean(|o| o.beta_lower),
            outcomes,
            seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    /// The full configuration; rerunning it reproduces every non-timing field.
    pub config: serde_json::Value,
    pub seed: u64,
    pub axes: Vec<Axis>,
    pub cells: Vec<CellResult>,
    pub seconds: f64,
}

impl ExperimentReport {
    /// Long-format CSV: one line per cell with its coordinates and summary.
    pub fn write_grid_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        writeln!(out, "{},trials,successes,success_rate,mean_beta,mean_beta_lower", names.join(","))?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for c in &self.cells {
            let coords: Vec<String> = c.coords.iter().map(|v| format!("{v:?}")).collect();
            writeln!(
                out,
                "{},{},{},{:?},{},{}",
                coords.join(","),
                c.trials,
                c.successes,
                c.success_rate,
                opt(c.mean_beta),
                opt(c.mean_beta_lower)
            )?;
        }
        Ok(())
    }

    pub fn cell(&self, coords: &[f64]) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.coords == coords)
    }
}

/// Grid over outlier fraction and λ; each trial generates, solves and checks
/// exact recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionConfig {
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Generation template; `num_outliers` and `seed` are set per trial.
    pub base: GenSpec,
    /// Solver template; `lambda` is set per cell.
    pub solver: SolverConfig,
    pub thresholds: RecoveryThresholds,
}

impl PhaseTransitionConfig {
    pub fn new(gammas: Vec<f64>, lambdas: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            gammas,
            lambdas,
            trials,
            seed,
            base: GenSpec::standard(0, 0),
            solver: SolverConfig::default(),
            thresholds: RecoveryThresholds::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.lambdas.is_empty() || self.trials == 0 {
            return Err(LrrError::InvalidInput("grids and trial count must be nonempty".into()));
        }
        for &g in &self.gammas {
            outliers_for_fraction(self.base.num_authentic(), g)?;
        }
        for &l in &self.lambdas {
            SolverConfig { lambda: l, ..self.solver.clone() }.validate()?;
        }
        Ok(())
    }
}

fn recovery_trial(spec: &GenSpec, solver: &SolverConfig, thresholds: &RecoveryThresholds) -> Result<TrialOutcome> {
    let inst = generate(spec)?;
    let sol = solve_lrr(inst.x.as_ref(), solver)?;
    let verdict = recovery::check_exact_recovery_with(&sol, inst.v0.as_ref(), &inst.support0, inst.x.as_ref(), thresholds)?;
    Ok(TrialOutcome {
        seed: spec.seed,
        success: verdict.success,
        converged: Some(sol.converged),
        iterations: Some(sol.iterations),
        rowspace_error: Some(verdict.rowspace_error),
        support_exact: Some(verdict.support_exact),
        rowspace_leakage: Some(recovery::rowspace_leakage(inst.x.as_ref(), sol.z.as_ref())?),
        beta: None,
        beta_lower: None,
        error: None,
    })
}

pub fn phase_transition(cfg: &PhaseTransitionConfig, workers: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let nl = cfg.lambdas.len();
    let cells = run_cells(cfg.gammas.len() * nl, workers, |index| {
        let cell_start = Instant::now();
        let (gamma, lambda) = (cfg.gammas[index / nl], cfg.lambdas[index % nl]);
        let cell_seed = derive_seed(cfg.seed, index as u64);
        let solver = SolverConfig { lambda, ..cfg.solver.clone() };
        // Validated above.
        let outliers = outliers_for_fraction(cfg.base.num_authentic(), gamma).unwrap_or(0);
        let outcomes = (0..cfg.trials)
            .map(|t| {
                let spec = GenSpec {
                    num_outliers: outliers,
                    seed: derive_seed(cell_seed, t as u64),
                    ..cfg.base.clone()
                };
                recovery_trial(&spec, &solver, &cfg.thresholds).unwrap_or_else(|e| TrialOutcome::failed(spec.seed, &e))
            })
            .collect();
        CellResult::new(index, vec![gamma, lambda], cell_seed, outcomes, cell_start.elapsed().as_secs_f64())
    })?;
    Ok(ExperimentReport {
        kind: "phase-transition".into(),
        config: serde_json::to_value(cfg)?,
        seed: cfg.seed,
        axes: vec![
            Axis { name: "gamma".into(), values: cfg.gammas.clone() },
            Axis { name: "lambda".into(), values: cfg.lambdas.clone() },
        ],
        cells,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// RWD parameter against outlier magnitude at a fixed outlier fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSweepConfig {
    /// Targets for `‖C₀‖/‖X₀‖`.
    pub ratios: Vec<f64>,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
    pub base: GenSpec,
}

impl BetaSweepConfig {
    pub fn new(ratios: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            ratios,
            gamma: 0.5,
            trials,
            seed,
            base: GenSpec::standard(0, 0),
        }
    }
}

/// Trial `t` uses the same base instance at every ratio (seed
/// `derive_seed(seed, t)`), so the grid compares magnitudes on common data.
pub fn beta_sweep(cfg: &BetaSweepConfig, workers: usize) -> Result<ExperimentReport> {
    if cfg.ratios.is_empty() || cfg.trials == 0 {
        return Err(LrrError::InvalidInput("ratio grid and trial count must be nonempty".into()));
    }
    if let Some(r) = cfg.ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(LrrError::InvalidInput(format!("magnitude ratio {r}")));
    }
    let outliers = outliers_for_fraction(cfg.base.num_authentic(), cfg.gamma)?;
    let start = Instant::now();
    let cells = run_cells(cfg.ratios.len(), workers, |index| {
        let cell_start = Instant::now();
        let ratio = cfg.ratios[index];
        let outcomes = (0..cfg.trials)
            .map(|t| {
                let spec = GenSpec {
                    num_outliers: outliers,
                    seed: derive_seed(cfg.seed, t as u64),
                    ..cfg.base.clone()
                };
                beta_trial(&spec, ratio).unwrap_or_else(|e| TrialOutcome::failed(spec.seed, &e))
            })
            .collect();
        CellResult::new(index, vec![ratio], cfg.seed, outcomes, cell_start.elapsed().as_secs_f64())
    })?;
    Ok(ExperimentReport {
        kind: "beta-sweep".into(),
        config: serde_json::to_value(cfg)?,
        seed: cfg.seed,
        axes: vec![Axis { name: "ratio".into(), values: cfg.ratios.clone() }],
        cells,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn beta_trial(spec: &GenSpec, ratio: f64) -> Result<TrialOutcome> {
    let inst = generate(spec)?.with_outlier_ratio(ratio)?;
    let beta = recovery::rwd_beta(inst.x.as_ref(), inst.v0.as_ref())?;
    let lower = match recovery::beta_lower_bound(inst.x0.as_ref(), inst.c0.as_ref()) {
        Ok((b, _)) => Some(b),
        Err(LrrError::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TrialOutcome {
        seed: spec.seed,
        success: lower.is_none_or(|b| beta >= b - 1e-10),
        converged: None,
        iterations: None,
        rowspace_error: None,
        support_exact: None,
        rowspace_leakage: None,
        beta: Some(beta),
        beta_lower: lower,
        error: None,
    })
}

/// Ground truth for scoring a segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub support0: ColumnSupport,
    /// Class of each authentic column, in column order.
    pub labels: Vec<usize>,
}

impl Truth {
    pub fn of(inst: &ProblemInstance) -> Self {
        Self {
            support0: inst.support0.clone(),
            labels: inst.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub k: usize,
    pub solver: SolverConfig,
    pub seed: u64,
    /// Relative outlier threshold on `‖C*ᵢ‖/‖Xᵢ‖`.
    pub delta_rel: f64,
    /// Relative rank cutoff for the column space of `Z*`.
    pub rank_rel_tol: f64,
}

impl SegmentConfig {
    pub fn new(k: usize, lambda: f64, seed: u64) -> Self {
        Self {
            k,
            solver: SolverConfig::with_lambda(lambda),
            seed,
            delta_rel: DEFAULT_DELTA_REL,
            rank_rel_tol: RecoveryThresholds::default().rank_rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub config: SegmentConfig,
    pub solve: SolveSummary,
    /// Columns flagged as outliers.
    pub outliers: Vec<usize>,
    /// Cluster of every column; `None` for flagged outliers, which are not
    /// clustered.
    pub labels: Vec<Option<usize>>,
    pub scores: Vec<f64>,
    /// Over the true authentic columns; unclustered ones count as errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

/// Solve, flag outliers, spectrally cluster the remaining columns on
/// `|U*U*ᵀ|`, and score against `truth` when given.
pub fn segment(x: MatRef<'_, f64>, cfg: &SegmentConfig, truth: Option<&Truth>) -> Result<SegmentReport> {
    if let Some(t) = truth {
        if t.support0.universe() != x.ncols() || t.labels.len() != x.ncols() - t.support0.len() {
            return Err(LrrError::mismatch("segment: ground truth", x.ncols(), t.support0.universe()));
        }
    }
    let (sol, solve) = solve_summarized(x, &cfg.solver)?;
    let scores = outlier::score_columns(sol.c.as_ref());
    let flagged = outlier::classify(&scores, x, cfg.delta_rel)?;
    let kept = flagged.complement();
    if cfg.k == 0 || cfg.k > kept.len() {
        return Err(LrrError::InvalidInput(format!(
            "cluster count {} not in 1..={} (columns left after outlier removal)",
            cfg.k,
            kept.len()
        )));
    }
    let u_star = linalg::column_space_basis(sol.z.as_ref(), cfg.rank_rel_tol)?;
    let u_kept = linalg::select_rows(u_star.as_ref(), kept.indices());
    let w = segmentation::sim_affinity(u_kept.as_ref());
    let clustering = segmentation::spectral_cluster(w.as_ref(), cfg.k, cfg.seed)?;
    let mut labels = vec![None; x.ncols()];
    for (&col, &l) in kept.indices().iter().zip(&clustering.labels) {
        labels[col] = Some(l);
    }

    let (acc, auc) = match truth {
        Some(t) => {
            let auc = match outlier::roc_auc(&scores, &t.support0) {
                Ok(r) => Some(r.auc),
                Err(LrrError::UndefinedAuc) => None,
                Err(e) => return Err(e),
            };
            (Some(authentic_accuracy(&labels, t, cfg.k)), auc)
        }
        None => (None, None),
    };
    Ok(SegmentReport {
        config: cfg.clone(),
        solve,
        outliers: flagged.indices().to_vec(),
        labels,
        scores,
        acc,
        auc,
    })
}

fn authentic_accuracy(labels: &[Option<usize>], truth: &Truth, k: usize) -> f64 {
    let authentic = truth.support0.complement();
    let pairs: Vec<(usize, usize)> = authentic
        .indices()
        .iter()
        .zip(&truth.labels)
        .filter_map(|(&col, &class)| labels[col].map(|l| (l, class)))
        .collect();
    let (pred, classes): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    let majority = segmentation::cluster_classes(&pred, &classes, k);
    let correct = pairs.iter().filter(|(l, c)| majority[*l] == Some(*c)).count();
    correct as f64 / truth.labels.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub lambda: f64,
    pub oracle_iterations: usize,
    pub oracle_converged: bool,
    pub oracle: OracleStructure,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    /// `λ²‖X‖²γn`.
    pub psi_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<certificate::DualChecks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_identity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incoherence_slack: Option<f64>,
    /// Why no certificate could be built, if none was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inapplicable: Option<String>,
    pub passed: bool,
}

/// Oracle solve, certificate construction and checks at `lambda`.
pub fn certify(inst: &ProblemInstance, lambda: f64) -> Result<CertifyReport> {
    let x = inst.x.as_ref();
    let v0 = inst.v0.as_ref();
    let oracle = solve_oracle(x, v0, &inst.support0, &certificate::oracle_config(lambda))?;
    let structure = certificate::oracle_structure(&oracle, x, v0, &inst.support0)?;
    let norm_x = linalg::spectral_norm(x)?;
    let n = inst.ncols();
    let gamma = inst.gamma();
    let mut report = CertifyReport {
        lambda,
        oracle_iterations: oracle.iterations,
        oracle_converged: oracle.converged,
        oracle: structure,
        psi: None,
        psi_bound: recovery::psi_bound(lambda, norm_x, gamma, n),
        checks: None,
        support_identity: None,
        incoherence_slack: None,
        inapplicable: None,
        passed: false,
    };
    match certificate::build_certificate(x, v0, &inst.support0, &oracle, lambda) {
        Ok(cert) => {
            let mu = recovery::incoherence_mu(v0, n, gamma);
            report.incoherence_slack = Some(certificate::incoherence_slack(cert.v_bar.as_ref(), &inst.support0, mu, gamma)?);
            report.psi = Some(cert.psi);
            report.support_identity = Some(cert.support_identity);
            report.passed = cert.checks.passed && cert.support_identity <= cert.checks.equality_tol;
            report.checks = Some(cert.checks);
        }
        Err(LrrError::CertificateInapplicable { psi }) => {
            report.psi = Some(psi);
            report.inapplicable = Some(format!("psi = {psi} >= 1"));
        }
        Err(e @ (LrrError::Numerical(_) | LrrError::DegenerateColumn(_))) => {
            report.inapplicable = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}
