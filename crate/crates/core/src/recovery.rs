//! Recovery-condition quantities (RWD parameter β, incoherence μ, critical
//! outlier fraction γ*, recommended λ) and the exact-recovery verdict for a
//! solved instance.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::generate::ProblemInstance;
use crate::linalg::{self, ColumnSupport, DEFAULT_RANK_REL_TOL};
use crate::outlier;
use crate::solver::LrrSolution;

/// `β = 1/(‖X‖·‖Σ_X⁻¹V_XᵀV₀‖)`, inverting only singular values above the
/// default rank threshold. If `v0` leaves the row space of `x`, β is computed
/// on the projected part and a warning is logged.
pub fn rwd_beta(x: MatRef<'_, f64>, v0: MatRef<'_, f64>) -> Result<f64> {
    if v0.nrows() != x.ncols() {
        return Err(LrrError::mismatch("rwd_beta: v0 rows", x.ncols(), v0.nrows()));
    }
    let f = linalg::svd(x, DEFAULT_RANK_REL_TOL)?;
    if f.rank == 0 {
        return Err(LrrError::InvalidInput("rwd_beta: x is zero".into()));
    }
    let coords = f.v_r().transpose() * v0;
    let outside = linalg::spectral_norm((v0 - f.v_r() * &coords).as_ref())?;
    if outside > 1e-8 {
        log::warn!("v0 leaves the row space of x by {outside:.3e}; beta uses the projected part");
    }
    let inv: Vec<f64> = f.sigma_r().iter().map(|s| 1.0 / s).collect();
    let scaled = linalg::scale_rows(coords.as_ref(), &inv);
    let norm = linalg::spectral_norm(scaled.as_ref())?;
    Ok(1.0 / (f.sigma[0] * norm))
}

/// Smallest principal angle between the column spaces of `a` and `b`, in
/// `[0, π/2]`. Either space being trivial gives `π/2`.
pub fn smallest_principal_angle(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<f64> {
    let ua = linalg::column_space_basis(a, DEFAULT_RANK_REL_TOL)?;
    let ub = linalg::column_space_basis(b, DEFAULT_RANK_REL_TOL)?;
    if ua.ncols() == 0 || ub.ncols() == 0 {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let cross = ub.transpose() * &ua;
    let cos = linalg::spectral_norm(cross.as_ref())?.min(1.0);
    // The sine from the residual of b against span(a) keeps precision when
    // the angle is small.
    let resid = &ub - &ua * cross.transpose();
    let sv = linalg::singular_values(resid.as_ref())?;
    let sin = sv.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    Ok(sin.atan2(cos))
}

/// `sin θ / (cond(X₀)(1 + ‖C₀‖/‖X₀‖))` and `θ`, where θ is the smallest
/// principal angle between the column spans of `c0` and `x0`.
pub fn beta_lower_bound(x0: MatRef<'_, f64>, c0: MatRef<'_, f64>) -> Result<(f64, f64)> {
    if x0.nrows() != c0.nrows() {
        return Err(LrrError::mismatch("beta_lower_bound: rows", x0.nrows(), c0.nrows()));
    }
    let s0 = linalg::singular_values(x0)?;
    let r0 = linalg::numerical_rank(&s0, DEFAULT_RANK_REL_TOL);
    if r0 == 0 {
        return Err(LrrError::InvalidInput("beta_lower_bound: x0 is zero".into()));
    }
    let cond = s0[0] / s0[r0 - 1];
    let u0 = linalg::column_space_basis(x0, DEFAULT_RANK_REL_TOL)?;
    let uc = linalg::column_space_basis(c0, DEFAULT_RANK_REL_TOL)?;
    if uc.ncols() > 0 {
        let stacked = linalg::hstack(u0.as_ref(), uc.as_ref())?;
        let joint = linalg::column_space_basis(stacked.as_ref(), DEFAULT_RANK_REL_TOL)?.ncols();
        if joint < u0.ncols() + uc.ncols() {
            return Err(LrrError::NotApplicable(
                "span(C0) and span(X0) intersect nontrivially".into(),
            ));
        }
    }
    let theta = smallest_principal_angle(x0, c0)?;
    let nc0 = if uc.ncols() == 0 { 0.0 } else { linalg::spectral_norm(c0)? };
    let bound = theta.sin() / (cond * (1.0 + nc0 / s0[0]));
    Ok((bound, theta))
}

/// Smallest μ with `maxᵢ‖V₀ᵀeᵢ‖² ≤ μr₀/((1−γ)n)`.
pub fn incoherence_mu(v0: MatRef<'_, f64>, n: usize, gamma: f64) -> f64 {
    let r0 = v0.ncols();
    if r0 == 0 {
        return 0.0;
    }
    let max_row = (0..v0.nrows())
        .map(|i| v0.row(i).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    max_row * (1.0 - gamma) * n as f64 / r0 as f64
}

/// `γ*` solving `γ*/(1−γ*) = 324β²/(49(11+4β)²μr₀)`.
pub fn critical_gamma(beta: f64, mu: f64, r0: usize) -> f64 {
    let t = 324.0 * beta * beta / (49.0 * (11.0 + 4.0 * beta).powi(2) * mu * r0 as f64);
    t / (1.0 + t)
}

/// `3/(7‖X‖√(γ*n))` from the spectral norm of `X` and its column count.
pub fn recommended_lambda_from_norm(norm_x: f64, gamma_star: f64, n: usize) -> f64 {
    3.0 / (7.0 * norm_x * (gamma_star * n as f64).sqrt())
}

pub fn recommended_lambda(x: MatRef<'_, f64>, gamma_star: f64) -> Result<f64> {
    if !(gamma_star > 0.0 && gamma_star < 1.0) {
        return Err(LrrError::InvalidInput(format!("gamma_star {gamma_star} not in (0, 1)")));
    }
    let norm = linalg::spectral_norm(x)?;
    if norm == 0.0 {
        return Err(LrrError::InvalidInput("recommended_lambda: x is zero".into()));
    }
    Ok(recommended_lambda_from_norm(norm, gamma_star, x.ncols()))
}

/// `λ²‖X‖²γn`, the a-priori bound on ψ.
pub fn psi_bound(lambda: f64, norm_x: f64, gamma: f64, n: usize) -> f64 {
    lambda * lambda * norm_x * norm_x * gamma * n as f64
}

/// The open λ interval under which the certificate construction is proven
/// to work, or `None` when the outlier-fraction condition fails.
pub fn certificate_lambda_interval(
    beta: f64,
    mu: f64,
    r0: usize,
    gamma: f64,
    psi: f64,
    norm_x: f64,
    n: usize,
) -> Option<(f64, f64)> {
    let r0 = r0 as f64;
    let n = n as f64;
    let ratio = gamma / (1.0 - gamma);
    let cond = beta * beta * (1.0 - psi).powi(2) / ((3.0 - psi + beta).powi(2) * mu * r0);
    if !(psi < 1.0 && ratio < cond) {
        return None;
    }
    let denom = norm_x * n.sqrt() * (beta * (1.0 - psi) - (1.0 + beta) * (ratio * mu * r0).sqrt());
    let lo = (1.0 - psi) * (mu * r0 / (1.0 - gamma)).sqrt() / denom;
    let hi = if gamma > 0.0 {
        (1.0 - psi) / (norm_x * (gamma * n).sqrt() * (2.0 - psi))
    } else {
        f64::INFINITY
    };
    Some((lo, hi))
}

/// `‖V₀ − V_XV_XᵀV₀‖`; at most `1e-8` certifies that `v0` lies in the row
/// space of `x`.
pub fn check_v0_in_rowspace(x: MatRef<'_, f64>, v0: MatRef<'_, f64>) -> Result<f64> {
    if v0.nrows() != x.ncols() {
        return Err(LrrError::mismatch("check_v0_in_rowspace", x.ncols(), v0.nrows()));
    }
    let vx = linalg::row_space_basis(x, DEFAULT_RANK_REL_TOL)?;
    let proj = &vx * (vx.transpose() * v0);
    linalg::spectral_norm((v0 - &proj).as_ref())
}

/// `‖Z − V_XV_XᵀZ‖_F / max(1, ‖Z‖_F)`: how far `z` leaves the row space of
/// `x`. Optimal solutions have zero residual.
pub fn rowspace_leakage(x: MatRef<'_, f64>, z: MatRef<'_, f64>) -> Result<f64> {
    let vx = linalg::row_space_basis(x, DEFAULT_RANK_REL_TOL)?;
    let proj = linalg::project_row_space_left(vx.as_ref(), z)?;
    let resid = linalg::frobenius_norm((z - &proj).as_ref());
    Ok(resid / linalg::frobenius_norm(z).max(1.0))
}

/// Thresholds behind [`check_exact_recovery`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryThresholds {
    /// Relative singular-value cutoff for the numerical rank of `Z*`.
    pub rank_rel_tol: f64,
    /// Bound on `‖U*U*ᵀ − V₀V₀ᵀ‖`.
    pub rowspace_tol: f64,
    /// Column `i` is an outlier when `‖C*ᵢ‖ ≥ support_rel·‖Xᵢ‖`.
    pub support_rel: f64,
}

impl Default for RecoveryThresholds {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-6,
            rowspace_tol: 1e-4,
            support_rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryVerdict {
    pub rowspace_error: f64,
    pub detected_support: ColumnSupport,
    pub support_exact: bool,
    pub success: bool,
}

/// Columns whose `C` energy reaches `rel` times the data column norm. Zero
/// data columns are never flagged.
pub fn detect_support(c: MatRef<'_, f64>, x: MatRef<'_, f64>, rel: f64) -> Result<ColumnSupport> {
    if c.ncols() != x.ncols() {
        return Err(LrrError::mismatch("detect_support", x.ncols(), c.ncols()));
    }
    for (i, n) in linalg::column_norms(x).iter().enumerate() {
        if *n == 0.0 {
            log::warn!("column {i} of x is zero; excluded from support detection");
        }
    }
    outlier::classify(&outlier::score_columns(c), x, rel)
}

/// Compares a solution against the ground truth: row space through the
/// column space of `Z*`, outlier identities through the columns of `C*`.
pub fn check_exact_recovery(
    sol: &LrrSolution,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
    x: MatRef<'_, f64>,
) -> Result<RecoveryVerdict> {
    check_exact_recovery_with(sol, v0, support0, x, &RecoveryThresholds::default())
}

pub fn check_exact_recovery_with(
    sol: &LrrSolution,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
    x: MatRef<'_, f64>,
    thresholds: &RecoveryThresholds,
) -> Result<RecoveryVerdict> {
    let n = x.ncols();
    if sol.z.nrows() != n || sol.z.ncols() != n || v0.nrows() != n || support0.universe() != n {
        return Err(LrrError::mismatch(
            "check_exact_recovery",
            format!("n = {n}"),
            format!("z {}x{}, v0 rows {}, support universe {}", sol.z.nrows(), sol.z.ncols(), v0.nrows(), support0.universe()),
        ));
    }
    let u_star = linalg::column_space_basis(sol.z.as_ref(), thresholds.rank_rel_tol)?;
    let p_star = &u_star * u_star.transpose();
    let p0 = v0 * v0.transpose();
    let rowspace_error = linalg::spectral_norm((&p_star - &p0).as_ref())?;
    let detected_support = detect_support(sol.c.as_ref(), x, thresholds.support_rel)?;
    let support_exact = &detected_support == support0;
    Ok(RecoveryVerdict {
        rowspace_error,
        success: rowspace_error < thresholds.rowspace_tol && support_exact,
        detected_support,
        support_exact,
    })
}

/// Everything the recovery theory predicts for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    pub beta: f64,
    pub mu: f64,
    pub gamma_star: f64,
    pub lambda_rec: f64,
    /// `λ_rec²‖X‖²γn`, the predicted upper bound on ψ at `λ_rec`.
    pub psi: f64,
    pub gamma_observed: f64,
    pub r0: usize,
    /// `None` when span(C₀) and span(X₀) are dependent.
    pub theta: Option<f64>,
    pub beta_lower: Option<f64>,
    pub v0_rowspace_residual: f64,
    pub norm_x: f64,
    pub n: usize,
}

pub fn analyze(inst: &ProblemInstance) -> Result<RecoveryDiagnostics> {
    let n = inst.ncols();
    let r0 = inst.rank0();
    if r0 == 0 {
        return Err(LrrError::InvalidInput("analyze: x0 is zero".into()));
    }
    let gamma = inst.gamma();
    let beta = rwd_beta(inst.x.as_ref(), inst.v0.as_ref())?;
    let mu = incoherence_mu(inst.v0.as_ref(), n, gamma);
    let gamma_star = critical_gamma(beta, mu, r0);
    let norm_x = linalg::spectral_norm(inst.x.as_ref())?;
    let lambda_rec = recommended_lambda_from_norm(norm_x, gamma_star, n);
    let (beta_lower, theta) = match beta_lower_bound(inst.x0.as_ref(), inst.c0.as_ref()) {
        Ok((b, t)) => (Some(b), Some(t)),
        Err(LrrError::NotApplicable(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(RecoveryDiagnostics {
        beta,
        mu,
        gamma_star,
        lambda_rec,
        psi: psi_bound(lambda_rec, norm_x, gamma, n),
        gamma_observed: gamma,
        r0,
        theta,
        beta_lower,
        v0_rowspace_residual: check_v0_in_rowspace(inst.x.as_ref(), inst.v0.as_ref())?,
        norm_x,
        n,
    })
}
