//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line to
//! stdout; the test fails if any criterion fails.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use faer::Mat;
use lrr::certificate::{self, build_certificate, oracle_config, oracle_structure};
use lrr::experiment::{
    self, beta_sweep, log_grid, phase_transition, worker_count, BetaSweepConfig, ExperimentReport,
    PhaseTransitionConfig, SegmentConfig, Truth,
};
use lrr::generate::{generate, GenSpec, ProblemInstance};
use lrr::linalg::{self, ColumnSupport, DenseMatrix};
use lrr::outlier;
use lrr::recovery;
use lrr::segmentation;
use lrr::solver::{solve_lrr, solve_oracle, SolverConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MASTER_SEED: u64 = 20_240_611;
const LEAKAGE_TOL: f64 = 1e-5;
/// λ grid for the window at γ = 0.5, logarithmic between its end points.
const WINDOW_LO: f64 = 0.02;
const WINDOW_HI: f64 = 2.0;

type Outcome = std::result::Result<String, String>;

/// Row-space leakage of every converged solve, with its origin.
#[derive(Default)]
struct Runs {
    leakage: Vec<(String, f64)>,
}

impl Runs {
    fn record(&mut self, origin: impl Into<String>, leakage: f64) {
        self.leakage.push((origin.into(), leakage));
    }

    fn record_report(&mut self, name: &str, report: &ExperimentReport) {
        for c in &report.cells {
            for o in &c.outcomes {
                if let (Some(true), Some(l)) = (o.converged, o.rowspace_leakage) {
                    self.record(format!("{name} {:?} seed {}", c.coords, o.seed), l);
                }
            }
        }
    }
}

fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

fn run(name: &str, results: &mut Vec<(String, bool)>, f: impl FnOnce() -> Outcome) {
    let outcome = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        )),
    };
    let (pass, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    report(&format!("{name}: {} {detail}", if pass { "PASS" } else { "FAIL" }));
    results.push((name.to_string(), pass));
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Rank-one data with ±1 coefficients (μ = 1) and a few small Gaussian
/// outliers, which keeps the outlier fraction below γ*.
fn low_fraction_instance(seed: u64, outliers: usize) -> ProblemInstance {
    let (d, authentic) = (60, 200);
    let n = authentic + outliers;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let signs: Vec<f64> = (0..authentic).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let x0 = Mat::from_fn(d, n, |i, j| if j < authentic { u[i] / un * signs[j] } else { 0.0 });
    let c0 = Mat::from_fn(d, n, |_, j| if j >= authentic { 0.1 * rng.sample::<f64, _>(StandardNormal) } else { 0.0 });
    let support = ColumnSupport::new((authentic..n).collect(), n).unwrap();
    ProblemInstance::from_parts(x0, c0, support, vec![0; authentic]).unwrap()
}

fn criterion_1(runs: &mut Runs) -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let inst = generate(&GenSpec::standard(0, seed)).map_err(|e| e.to_string())?;
        let sol = solve_lrr(inst.x.as_ref(), &SolverConfig::with_lambda(0.2)).map_err(|e| e.to_string())?;
        if sol.converged {
            runs.record(format!("no-outlier seed {seed}"), recovery::rowspace_leakage(inst.x.as_ref(), sol.z.as_ref()).unwrap());
        }
        let target = &inst.v0 * inst.v0.transpose();
        let err = linalg::spectral_norm((&sol.z - &target).as_ref()).unwrap();
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("seed {seed}: ‖Z* − V0V0ᵀ‖ = {err:.3e}"))?;
    }
    Ok(format!("10 seeds, max ‖Z* − V0V0ᵀ‖ = {worst:.3e} < 1e-4"))
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    let gammas = vec![0.1, 0.2, 0.3, 0.8, 0.9];
    let cfg = PhaseTransitionConfig::new(gammas.clone(), vec![0.2], 10, derive(2));
    let r = phase_transition(&cfg, worker_count(None)).map_err(|e| e.to_string())?;
    runs.record_report("gamma grid", &r);
    let rates: Vec<f64> = r.cells.iter().map(|c| c.success_rate).collect();
    let summary = format!("λ = 0.2, success rates over γ {gammas:?}: {rates:?}");
    for (g, rate) in gammas.iter().zip(&rates) {
        let want = if *g <= 0.3 { 1.0 } else { 0.0 };
        ensure(*rate == want, || format!("{summary}; γ = {g} expected {want}"))?;
    }
    Ok(summary)
}

fn criterion_3(runs: &mut Runs) -> Outcome {
    let lambdas = log_grid(WINDOW_LO, WINDOW_HI, 10);
    let cfg = PhaseTransitionConfig::new(vec![0.5], lambdas.clone(), 10, derive(3));
    let r = phase_transition(&cfg, worker_count(None)).map_err(|e| e.to_string())?;
    runs.record_report("lambda grid", &r);
    let rates: Vec<f64> = r.cells.iter().map(|c| c.success_rate).collect();
    let grid: Vec<String> = lambdas.iter().map(|l| format!("{l:.3}")).collect();
    let summary = format!("γ = 0.5, λ grid [{}], success rates {rates:?}", grid.join(", "));
    ensure(rates[0] == 0.0 && rates[9] == 0.0, || format!("{summary}; end points must fail"))?;
    ensure(rates[1..9].contains(&1.0), || format!("{summary}; no interior λ at rate 1"))?;
    Ok(summary)
}

fn criterion_4(runs: &Runs) -> Outcome {
    ensure(!runs.leakage.is_empty(), || "no converged runs recorded".into())?;
    let (origin, worst) = runs
        .leakage
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(o, l)| (o.clone(), *l))
        .unwrap();
    ensure(worst <= LEAKAGE_TOL, || format!("{origin}: leakage {worst:.3e} > {LEAKAGE_TOL:e}"))?;
    Ok(format!("{} converged solves, max leakage {worst:.3e} ({origin})", runs.leakage.len()))
}

fn criterion_5() -> Outcome {
    let ratios = [0.1, 0.3, 1.0, 3.0, 10.0];
    let outliers = 200;
    let mut min_margin = f64::INFINITY;
    for t in 0..100u64 {
        let seed = experiment_seed(5, t);
        let ratio = ratios[t as usize % ratios.len()];
        let inst = generate(&GenSpec::standard(outliers, seed))
            .and_then(|i| i.with_outlier_ratio(ratio))
            .map_err(|e| e.to_string())?;
        let beta = recovery::rwd_beta(inst.x.as_ref(), inst.v0.as_ref()).map_err(|e| e.to_string())?;
        let (bound, _) = recovery::beta_lower_bound(inst.x0.as_ref(), inst.c0.as_ref())
            .map_err(|e| format!("trial {t}: {e}"))?;
        min_margin = min_margin.min(beta - bound);
        ensure(beta >= bound - 1e-10, || format!("trial {t} (ratio {ratio}): β {beta:.6e} < bound {bound:.6e}"))?;
    }

    let sweep = BetaSweepConfig::new(vec![0.1, 0.3, 0.5, 1.0, 2.0], 10, derive(5));
    let r = beta_sweep(&sweep, worker_count(None)).map_err(|e| e.to_string())?;
    let means: Vec<f64> = r.cells.iter().map(|c| c.mean_beta.unwrap_or(f64::NAN)).collect();
    let summary = format!(
        "100 trials, min β − bound = {min_margin:.3e}; mean β over ‖C0‖/‖X0‖ {:?}: {}",
        sweep.ratios,
        means.iter().map(|m| format!("{m:.4e}")).collect::<Vec<_>>().join(", ")
    );
    ensure(means.windows(2).all(|w| w[1] < w[0]), || format!("{summary}; not strictly decreasing"))?;
    Ok(summary)
}

/// One built certificate and the quantities the bound checks need.
struct Built {
    origin: String,
    lambda: f64,
    at_recommended: bool,
    gamma: f64,
    gamma_star: f64,
    psi: f64,
    psi_bound: f64,
    slack: f64,
    cert: certificate::DualCertificate,
    structure_holds: bool,
}

fn build(origin: String, inst: &ProblemInstance, lambda: f64, at_recommended: bool) -> std::result::Result<Built, String> {
    let diag = recovery::analyze(inst).map_err(|e| e.to_string())?;
    let (x, v0) = (inst.x.as_ref(), inst.v0.as_ref());
    let oracle = solve_oracle(x, v0, &inst.support0, &oracle_config(lambda)).map_err(|e| e.to_string())?;
    let structure = oracle_structure(&oracle, x, v0, &inst.support0).map_err(|e| e.to_string())?;
    let cert = build_certificate(x, v0, &inst.support0, &oracle, lambda).map_err(|e| format!("{origin}: {e}"))?;
    let slack = certificate::incoherence_slack(cert.v_bar.as_ref(), &inst.support0, diag.mu, inst.gamma())
        .map_err(|e| e.to_string())?;
    Ok(Built {
        origin,
        lambda,
        at_recommended,
        gamma: inst.gamma(),
        gamma_star: diag.gamma_star,
        psi: cert.psi,
        psi_bound: recovery::psi_bound(lambda, diag.norm_x, inst.gamma(), inst.ncols()),
        slack,
        cert,
        structure_holds: structure.holds,
    })
}

/// Certificates shared by the ψ, dual-condition and incoherence criteria:
/// five low-fraction instances at the recommended λ, the same instances at a
/// smaller λ, and two protocol instances at λ = 0.2.
fn certificates() -> std::result::Result<Vec<Built>, String> {
    let mut out = Vec::new();
    for seed in 0..5u64 {
        let inst = low_fraction_instance(experiment_seed(7, seed), 2);
        let lambda = recovery::analyze(&inst).map_err(|e| e.to_string())?.lambda_rec;
        out.push(build(format!("low-fraction seed {seed}"), &inst, lambda, true)?);
        if seed < 2 {
            out.push(build(format!("low-fraction seed {seed} at λ/2"), &inst, lambda / 2.0, false)?);
        }
    }
    for seed in 0..2u64 {
        let inst = generate(&GenSpec::standard(22, experiment_seed(8, seed))).map_err(|e| e.to_string())?;
        out.push(build(format!("protocol γ = 0.1 seed {seed}"), &inst, 0.2, false)?);
    }
    Ok(out)
}

fn criterion_6(certs: &[Built]) -> Outcome {
    let mut rec_max: f64 = 0.0;
    for b in certs {
        ensure(b.psi <= b.psi_bound + 1e-10, || {
            format!("{}: ψ {:.4e} > λ²‖X‖²γn = {:.4e}", b.origin, b.psi, b.psi_bound)
        })?;
        if b.at_recommended {
            ensure(b.gamma <= b.gamma_star, || format!("{}: γ {} above γ* {}", b.origin, b.gamma, b.gamma_star))?;
            ensure(b.psi <= 9.0 / 49.0 + 1e-10, || format!("{}: ψ {:.4e} > 9/49 at λ_rec", b.origin, b.psi))?;
            rec_max = rec_max.max(b.psi);
        }
    }
    Ok(format!("{} certificates within λ²‖X‖²γn; max ψ at λ_rec = {rec_max:.4e} ≤ 9/49", certs.len()))
}

fn criterion_7(certs: &[Built]) -> Outcome {
    let mut lines = Vec::new();
    for b in certs.iter().filter(|b| b.at_recommended) {
        let c = &b.cert.checks;
        ensure(b.structure_holds, || format!("{}: oracle rank or support differs from the truth", b.origin))?;
        ensure(c.s1.max(c.s2).max(c.s3) <= 1e-5, || format!("{}: S1–S3 = {:.2e}, {:.2e}, {:.2e}", b.origin, c.s1, c.s2, c.s3))?;
        ensure(c.s4 < 1.0, || format!("{}: S4 = {:.4}", b.origin, c.s4))?;
        ensure(c.s5 < b.lambda, || format!("{}: S5 = {:.4e} ≥ λ = {:.4e}", b.origin, c.s5, b.lambda))?;
        ensure(b.cert.support_identity <= 1e-5, || format!("{}: support identity {:.2e}", b.origin, b.cert.support_identity))?;
        lines.push(format!(
            "S1–S3 ≤ {:.1e}, S4 {:.3}, S5/λ {:.3}, identity {:.1e}",
            c.s1.max(c.s2).max(c.s3),
            c.s4,
            c.s5 / b.lambda,
            b.cert.support_identity
        ));
    }
    ensure(lines.len() == 5, || format!("{} instances checked, expected 5", lines.len()))?;
    Ok(format!("5 instances at λ_rec: [{}]", lines.join("; ")))
}

fn criterion_8(certs: &[Built]) -> Outcome {
    let (origin, worst) = certs
        .iter()
        .map(|b| (b.origin.as_str(), b.slack))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("no certificates")?;
    ensure(worst >= -1e-10, || format!("{origin}: slack {worst:.3e}"))?;
    Ok(format!("{} certificates, min slack {worst:.4e} ({origin})", certs.len()))
}

fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn check_auc(rng: &mut ChaCha8Rng) -> std::result::Result<f64, String> {
    let mut worst: f64 = 0.0;
    for v in 0..100 {
        let n = rng.random_range(2..40);
        // Coarse scores force ties.
        let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).floor() / 8.0).collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        positive[0] = true;
        positive[1] = false;
        positive.shuffle(rng);
        let auc = outlier::roc_auc(&scores, &ColumnSupport::from_mask(&positive)).map_err(|e| e.to_string())?.auc;
        let diff = (auc - pair_count_auc(&scores, &positive)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-12, || format!("AUC vector {v}: differs by {diff:.3e}"))?;
    }
    Ok(worst)
}

fn labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..k.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let l = code % k;
                    code /= k;
                    l
                })
                .collect()
        })
        .collect()
}

/// Best fraction over every map from clusters to classes.
fn brute_accuracy(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    labelings(k, k)
        .iter()
        .map(|map| pred.iter().zip(truth).filter(|(p, t)| map[**p] == **t).count())
        .max()
        .unwrap() as f64
        / pred.len() as f64
}

fn check_accuracy() -> std::result::Result<usize, String> {
    let mut cases = 0;
    for n in 1..=6 {
        let all = labelings(n, 3);
        for pred in &all {
            for truth in &all {
                let acc = segmentation::accuracy(pred, truth).map_err(|e| e.to_string())?;
                let brute = brute_accuracy(pred, truth, 3);
                ensure((acc - brute).abs() <= 1e-15, || format!("ACC {pred:?} vs {truth:?}: {acc} != {brute}"))?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    linalg::max_abs((a - b).as_ref())
}

fn check_norms(rng: &mut ChaCha8Rng) -> std::result::Result<f64, String> {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let mut close = |what: &str, i: usize, d: f64| {
        worst = worst.max(d);
        ensure(d <= TOL, || format!("instance {i}: {what} off by {d:.3e}"))
    };
    for i in 0..100 {
        let m = gaussian(rng, 10, 10);
        let nm = gaussian(rng, 10, 10);
        let ru = rng.random_range(1..10);
        let rv = rng.random_range(1..10);
        let u = linalg::column_space_basis(gaussian(rng, 10, ru).as_ref(), 1e-9).unwrap();
        let v = linalg::column_space_basis(gaussian(rng, 10, rv).as_ref(), 1e-9).unwrap();
        let mask: Vec<bool> = (0..10).map(|_| rng.random::<bool>()).collect();
        let support = ColumnSupport::from_mask(&mask);

        type Proj<'a> = Box<dyn Fn(&DenseMatrix) -> DenseMatrix + 'a>;
        let projectors: Vec<(&str, Proj)> = vec![
            ("P_U", Box::new(|a: &DenseMatrix| linalg::project_column_space(u.as_ref(), a.as_ref()).unwrap())),
            ("P_V^L", Box::new(|a: &DenseMatrix| linalg::project_row_space_left(v.as_ref(), a.as_ref()).unwrap())),
            ("P_V", Box::new(|a: &DenseMatrix| linalg::project_row_space(v.as_ref(), a.as_ref()).unwrap())),
            ("P_I", Box::new(|a: &DenseMatrix| linalg::project_columns(&support, a.as_ref()).unwrap())),
            ("P_T", Box::new(|a: &DenseMatrix| linalg::project_t(u.as_ref(), v.as_ref(), a.as_ref()).unwrap())),
        ];
        for (name, p) in &projectors {
            let once = p(&m);
            close(&format!("{name} idempotence"), i, max_diff(&p(&once), &once))?;
            let lhs = linalg::inner(once.as_ref(), nm.as_ref());
            let rhs = linalg::inner(m.as_ref(), p(&nm).as_ref());
            close(&format!("{name} self-adjointness"), i, (lhs - rhs).abs())?;
        }
        let (pu, pi) = (&projectors[0].1, &projectors[3].1);
        close("P_U P_I = P_I P_U", i, max_diff(&pu(&pi(&m)), &pi(&pu(&m))))?;
        let left = linalg::project_columns(&support, (&m * &nm).as_ref()).unwrap();
        let right = &m * linalg::project_columns(&support, nm.as_ref()).unwrap();
        close("P_I(MN) = M P_I(N)", i, max_diff(&left, &right))?;

        let prod = linalg::l2inf_norm((&m * &nm).as_ref());
        let bound = linalg::spectral_norm(m.as_ref()).unwrap() * linalg::l2inf_norm(nm.as_ref());
        ensure(prod <= bound * (1.0 + TOL), || format!("instance {i}: ‖MN‖₂,∞ {prod} > {bound}"))?;
        let ip = linalg::inner(m.as_ref(), nm.as_ref()).abs();
        let holder = linalg::l2inf_norm(m.as_ref()) * linalg::l21_norm(nm.as_ref());
        ensure(ip <= holder * (1.0 + TOL), || format!("instance {i}: |⟨M,N⟩| {ip} > {holder}"))?;

        let h = linalg::normalize_columns_on_support(m.as_ref(), &support);
        if let Ok(h) = h {
            let norm = linalg::spectral_norm(h.as_ref()).unwrap();
            let cap = (support.len() as f64).sqrt();
            ensure(norm <= cap + TOL, || format!("instance {i}: ‖H‖ {norm} > √|I| {cap}"))?;
        }

        let r = ru.min(rv);
        let (uu, vv) = (linalg::select_columns(u.as_ref(), &(0..r).collect::<Vec<_>>()), linalg::select_columns(v.as_ref(), &(0..r).collect::<Vec<_>>()));
        let lhs = linalg::l2inf_norm((&uu * vv.transpose()).as_ref());
        let rhs = linalg::l2inf_norm(vv.transpose());
        close("‖UVᵀ‖₂,∞ = max‖Vᵀeᵢ‖", i, (lhs - rhs).abs())?;
    }
    for size in [1usize, 4, 9] {
        let col = gaussian(rng, 10, 1);
        let unit = linalg::scaled(col.as_ref(), 1.0 / linalg::frobenius_norm(col.as_ref()));
        let h = Mat::from_fn(10, 12, |r, c| if c < size { unit[(r, 0)] } else { 0.0 });
        let norm = linalg::spectral_norm(h.as_ref()).unwrap();
        let cap = (size as f64).sqrt();
        close(&format!("tight ‖H‖ = √{size}"), size, (norm - cap).abs())?;
    }
    Ok(worst)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(9));
    let auc = check_auc(&mut rng)?;
    let acc = check_accuracy()?;
    let norms = check_norms(&mut rng)?;
    Ok(format!(
        "AUC vs pair counting max diff {auc:.1e} on 100 vectors; ACC brute force on {acc} labeling pairs; \
         projector and norm identities on 100 instances, max deviation {norms:.1e}"
    ))
}

fn criterion_10(runs: &mut Runs) -> Outcome {
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let inst = generate(&GenSpec::standard(86, experiment_seed(10, seed))).map_err(|e| e.to_string())?;
        let cfg = SegmentConfig::new(5, 0.2, seed);
        let r = experiment::segment(inst.x.as_ref(), &cfg, Some(&Truth::of(&inst))).map_err(|e| e.to_string())?;
        if r.solve.converged {
            runs.record(format!("segment seed {seed}"), r.solve.rowspace_leakage);
        }
        let (acc, auc) = (r.acc.unwrap_or(f64::NAN), r.auc.unwrap_or(f64::NAN));
        ensure(acc == 1.0 && auc == 1.0, || format!("seed {seed}: ACC {acc}, AUC {auc}"))?;
        lines.push(format!("{} outliers flagged", r.outliers.len()));
    }
    Ok(format!("γ = 0.3, λ = 0.2, k = 5: ACC = AUC = 1 on 5 seeds ({})", lines.join(", ")))
}

fn derive(criterion: u64) -> u64 {
    lrr::generate::derive_seed(MASTER_SEED, criterion)
}

fn experiment_seed(criterion: u64, trial: u64) -> u64 {
    lrr::generate::derive_seed(derive(criterion), trial)
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();
    let mut runs = Runs::default();
    // Cheap criteria first; the leakage check runs after every solve is in.
    run("criterion 9 (metric and norm oracles)", &mut results, criterion_9);
    let certs = &certificates();
    let with_certs = |f: fn(&[Built]) -> Outcome| {
        move || match certs {
            Ok(c) => f(c),
            Err(e) => Err(format!("certificate construction failed: {e}")),
        }
    };
    run("criterion 6 (ψ bounds)", &mut results, with_certs(criterion_6));
    run("criterion 7 (dual certificate)", &mut results, with_certs(criterion_7));
    run("criterion 8 (incoherence bound)", &mut results, with_certs(criterion_8));
    run("criterion 1 (no-outlier exactness)", &mut results, || criterion_1(&mut runs));
    run("criterion 10 (segmentation pipeline)", &mut results, || criterion_10(&mut runs));
    run("criterion 5 (β lower bound and trend)", &mut results, criterion_5);
    run("criterion 3 (λ window at γ = 0.5)", &mut results, || criterion_3(&mut runs));
    run("criterion 2 (phase transition in γ)", &mut results, || criterion_2(&mut runs));
    run("criterion 4 (row-space leakage)", &mut results, || criterion_4(&runs));

    let failed: Vec<&str> = results.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    report(&format!("{} of {} criteria passed", results.len() - failed.len(), results.len()));
    assert!(failed.is_empty(), "failed: {failed:?}");
}
