//! Explicit dual certificate built from an oracle solution, and numerical
//! checks of the conditions that make the oracle solution optimal for the
//! unconstrained program.
//!
//! Notation: `V̄ = V̂ÛᵀV₀` for the skinny SVD `Ẑ = ÛΣ̂V̂ᵀ`, `Ĥ` is `Ĉ` with its
//! supported columns normalized, `G = P_I₀(V̄ᵀ)P_I₀(V̄ᵀ)ᵀ` and `ψ = ‖G‖`.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::linalg::{self, ColumnSupport, DenseMatrix, DEFAULT_RANK_REL_TOL};
use crate::recovery::{detect_support, RecoveryThresholds};
use crate::solver::{OracleSolution, SolverConfig};

/// Residuals of the optimality conditions. Equalities are reported both in
/// absolute Frobenius norm and relative to the norm of their right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualChecks {
    /// `‖P_Û(XᵀQ) − ÛV̂ᵀ‖_F / ‖ÛV̂ᵀ‖_F`.
    pub s1: f64,
    /// `‖P_V̂(XᵀQ) − ÛV̂ᵀ‖_F / ‖ÛV̂ᵀ‖_F`.
    pub s2: f64,
    /// `‖P_I₀(Q) − λĤ‖_F / ‖λĤ‖_F`.
    pub s3: f64,
    /// `‖P_T̂⊥(XᵀQ)‖`, must be below 1.
    pub s4: f64,
    /// `‖P_I₀ᶜ(Q)‖₂,∞`, must be below λ.
    pub s5: f64,
    pub s1_abs: f64,
    pub s2_abs: f64,
    pub s3_abs: f64,
    pub lambda: f64,
    pub equality_tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// `n×r₀`, orthonormal columns.
    pub v_bar: DenseMatrix,
    /// `d×n`, unit columns on `I₀`, zero elsewhere.
    pub h_hat: DenseMatrix,
    /// `r₀×r₀`.
    pub g: DenseMatrix,
    pub q1: DenseMatrix,
    pub q2: DenseMatrix,
    /// `d×n` dual matrix.
    pub q: DenseMatrix,
    pub psi: f64,
    /// `‖V₀P_I₀(V̄ᵀ) − λP_V₀(XᵀĤ)‖_F`.
    pub support_identity_abs: f64,
    /// `support_identity_abs` relative to `‖λP_V₀(XᵀĤ)‖_F`.
    pub support_identity: f64,
    pub checks: DualChecks,
}

/// Default tolerance on the relative equality residuals.
pub const DEFAULT_EQUALITY_TOL: f64 = 1e-6;

/// Oracle solver settings accurate enough for the equality conditions.
/// The equalities are stationarity conditions, so they need the dual to
/// converge, not just the primal residual: a slower penalty growth and a
/// tighter stop take the residuals from ~1e-3 to ~1e-12.
pub fn oracle_config(lambda: f64) -> SolverConfig {
    SolverConfig {
        rho: 1.02,
        tol_primal: 1e-13,
        max_iters: 20000,
        ..SolverConfig::with_lambda(lambda)
    }
}

fn relative(abs: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        abs / reference
    } else {
        abs
    }
}

/// `V̄ = V̂ÛᵀV₀` from an oracle `Ẑ` whose column space lies in `span(V₀)`.
/// Fails when `Ẑ` has fewer than `r₀` significant singular values.
pub fn v_bar_from_oracle(z_hat: MatRef<'_, f64>, v0: MatRef<'_, f64>) -> Result<DenseMatrix> {
    let r0 = v0.ncols();
    if z_hat.nrows() != v0.nrows() {
        return Err(LrrError::mismatch("v_bar_from_oracle", v0.nrows(), z_hat.nrows()));
    }
    // Ẑ = V₀W exactly, so Û = V₀U_W, V̂ = V_W and V̄ = V_W U_Wᵀ.
    let w = v0.transpose() * z_hat;
    let f = linalg::svd(w.as_ref(), 1e-6)?;
    if f.rank < r0 {
        return Err(LrrError::Numerical(format!(
            "oracle Z has rank {} below r0 = {r0}",
            f.rank
        )));
    }
    Ok(f.v_r() * f.u_r().transpose())
}

/// `G = P_I₀(V̄ᵀ)P_I₀(V̄ᵀ)ᵀ`.
pub fn gram_on_support(v_bar: MatRef<'_, f64>, support0: &ColumnSupport) -> Result<DenseMatrix> {
    if support0.universe() != v_bar.nrows() {
        return Err(LrrError::mismatch("gram_on_support", v_bar.nrows(), support0.universe()));
    }
    let rows = linalg::select_rows(v_bar, support0.indices());
    Ok(rows.transpose() * &rows)
}

/// `ψ = ‖P_I₀(V̄ᵀ)P_I₀(V̄ᵀ)ᵀ‖`: 0 for an empty support, 1 for a full one.
pub fn psi_of_instance(v_bar: MatRef<'_, f64>, support0: &ColumnSupport) -> Result<f64> {
    let g = gram_on_support(v_bar, support0)?;
    if g.nrows() == 0 {
        return Ok(0.0);
    }
    linalg::spectral_norm(g.as_ref())
}

/// `(I − G)⁻¹`; requires `ψ < 1`.
fn neumann_core(g: MatRef<'_, f64>) -> Result<DenseMatrix> {
    let k = g.nrows();
    let m = Mat::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } - g[(i, j)]);
    linalg::spd_inverse(linalg::symmetrize(m.as_ref()).as_ref())
}

/// Applies `P_V̄ P_I₀ᶜ P_V̄` to `m` (`p×n`).
pub fn restricted_operator(v_bar: MatRef<'_, f64>, support0: &ColumnSupport, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    let a = linalg::project_row_space(v_bar, m)?;
    let b = linalg::project_columns_complement(support0, a.as_ref())?;
    linalg::project_row_space(v_bar, b.as_ref())
}

/// Inverse of [`restricted_operator`] on the range of `P_V̄`, the closed form
/// of the Neumann series `I + Σᵢ(P_V̄P_I₀P_V̄)ⁱ`: `M ↦ MV̄(I − G)⁻¹V̄ᵀ`.
pub fn restricted_inverse(v_bar: MatRef<'_, f64>, g: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    if v_bar.nrows() != m.ncols() {
        return Err(LrrError::mismatch("restricted_inverse", v_bar.nrows(), m.ncols()));
    }
    let core = neumann_core(g)?;
    Ok(m * v_bar * core * v_bar.transpose())
}

/// `‖A⁻¹(A(M)) − M‖_F / ‖M‖_F` for `M = P_V̄(m)`, where `A` is
/// [`restricted_operator`].
pub fn neumann_roundtrip(v_bar: MatRef<'_, f64>, support0: &ColumnSupport, m: MatRef<'_, f64>) -> Result<f64> {
    let g = gram_on_support(v_bar, support0)?;
    let pm = linalg::project_row_space(v_bar, m)?;
    let forward = restricted_operator(v_bar, support0, pm.as_ref())?;
    let back = restricted_inverse(v_bar, g.as_ref(), forward.as_ref())?;
    Ok(relative(linalg::frobenius_norm((&back - &pm).as_ref()), linalg::frobenius_norm(pm.as_ref())))
}

/// `√(μr₀/((1−γ)n)) − ‖P_I₀ᶜ(V̄ᵀ)‖₂,∞`; nonnegative when the incoherence of
/// `V₀` carries over to `V̄`.
pub fn incoherence_slack(v_bar: MatRef<'_, f64>, support0: &ColumnSupport, mu: f64, gamma: f64) -> Result<f64> {
    let n = v_bar.nrows();
    let r0 = v_bar.ncols();
    if support0.universe() != n {
        return Err(LrrError::mismatch("incoherence_slack", n, support0.universe()));
    }
    let rows = linalg::select_rows(v_bar, support0.complement().indices());
    let value = linalg::l2inf_norm(rows.transpose());
    let bound = (mu * r0 as f64 / ((1.0 - gamma) * n as f64)).sqrt();
    Ok(bound - value)
}

/// Structure of the oracle solution: rank of `Ẑ` and its detected outlier
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStructure {
    pub rank: usize,
    pub support_exact: bool,
    pub holds: bool,
}

/// `rank(Ẑ) = r₀` and `supp(Ĉ) = I₀`, using the recovery thresholds.
pub fn oracle_structure(
    oracle: &OracleSolution,
    x: MatRef<'_, f64>,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
) -> Result<OracleStructure> {
    let t = RecoveryThresholds::default();
    let sv = linalg::singular_values(oracle.z_hat.as_ref())?;
    let rank = linalg::numerical_rank(&sv, t.rank_rel_tol);
    let detected = detect_support(oracle.c_hat.as_ref(), x, t.support_rel)?;
    let support_exact = &detected == support0;
    Ok(OracleStructure {
        rank,
        support_exact,
        holds: rank == v0.ncols() && support_exact,
    })
}

/// Builds `Q = U_XΣ_X⁻¹V_Xᵀ(V₀V̄ᵀ + λXᵀĤ − Q₁ − Q₂)` from an oracle solution
/// and evaluates its optimality conditions at [`DEFAULT_EQUALITY_TOL`].
pub fn build_certificate(
    x: MatRef<'_, f64>,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
    oracle: &OracleSolution,
    lambda: f64,
) -> Result<DualCertificate> {
    let n = x.ncols();
    if v0.nrows() != n || support0.universe() != n {
        return Err(LrrError::mismatch(
            "build_certificate",
            format!("n = {n}"),
            format!("v0 rows {}, support universe {}", v0.nrows(), support0.universe()),
        ));
    }
    let v_bar = v_bar_from_oracle(oracle.z_hat.as_ref(), v0)?;
    let h_hat = linalg::normalize_columns_on_support(oracle.c_hat.as_ref(), support0)?;
    let g = gram_on_support(v_bar.as_ref(), support0)?;
    let psi = if g.nrows() == 0 { 0.0 } else { linalg::spectral_norm(g.as_ref())? };
    if psi >= 1.0 {
        return Err(LrrError::CertificateInapplicable { psi });
    }

    let xt_h = x.transpose() * &h_hat;
    let q1 = linalg::scaled(linalg::project_row_space_left(v0, xt_h.as_ref())?.as_ref(), lambda);
    // Q₂ = λP_V₀⊥(XᵀĤ)V̄(I − G)⁻¹P_I₀ᶜ(V̄ᵀ); the left projector commutes with
    // the right-acting Neumann series.
    let perp = linalg::axpy(xt_h.as_ref(), -1.0, linalg::project_row_space_left(v0, xt_h.as_ref())?.as_ref());
    let core = neumann_core(g.as_ref())?;
    let off = linalg::project_columns_complement(support0, v_bar.transpose())?;
    let q2 = linalg::scaled((&perp * &v_bar * &core * &off).as_ref(), lambda);

    let uv = v0 * v_bar.transpose();
    let mut m = &uv + linalg::scaled(xt_h.as_ref(), lambda);
    m -= &q1;
    m -= &q2;
    let f = linalg::svd(x, DEFAULT_RANK_REL_TOL)?;
    let inv: Vec<f64> = f.sigma_r().iter().map(|s| 1.0 / s).collect();
    let coeff = linalg::scale_rows((f.v_r().transpose() * &m).as_ref(), &inv);
    let q = f.u_r() * &coeff;

    let on = linalg::project_columns(support0, v_bar.transpose())?;
    let identity_lhs = v0 * &on;
    let support_identity_abs = linalg::frobenius_norm((&identity_lhs - &q1).as_ref());
    let support_identity = relative(support_identity_abs, linalg::frobenius_norm(q1.as_ref()));

    let mut cert = DualCertificate {
        checks: DualChecks {
            s1: 0.0,
            s2: 0.0,
            s3: 0.0,
            s4: 0.0,
            s5: 0.0,
            s1_abs: 0.0,
            s2_abs: 0.0,
            s3_abs: 0.0,
            lambda,
            equality_tol: DEFAULT_EQUALITY_TOL,
            passed: false,
        },
        v_bar,
        h_hat,
        g,
        q1,
        q2,
        q,
        psi,
        support_identity_abs,
        support_identity,
    };
    cert.checks = verify_dual_conditions(&cert, x, v0, support0, lambda, DEFAULT_EQUALITY_TOL)?;
    Ok(cert)
}

/// Evaluates the five optimality conditions for `cert.q`.
pub fn verify_dual_conditions(
    cert: &DualCertificate,
    x: MatRef<'_, f64>,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
    lambda: f64,
    equality_tol: f64,
) -> Result<DualChecks> {
    let v_bar = cert.v_bar.as_ref();
    let uv = v0 * v_bar.transpose();
    let uv_norm = linalg::frobenius_norm(uv.as_ref());
    let xt_q = x.transpose() * &cert.q;

    let left = linalg::project_row_space_left(v0, xt_q.as_ref())?;
    let s1_abs = linalg::frobenius_norm((&left - &uv).as_ref());
    let right = linalg::project_row_space(v_bar, xt_q.as_ref())?;
    let s2_abs = linalg::frobenius_norm((&right - &uv).as_ref());
    let on = linalg::project_columns(support0, cert.q.as_ref())?;
    let lh = linalg::scaled(cert.h_hat.as_ref(), lambda);
    let s3_abs = linalg::frobenius_norm((&on - &lh).as_ref());
    let perp = linalg::project_t_perp(v0, v_bar, xt_q.as_ref())?;
    let s4 = linalg::spectral_norm(perp.as_ref())?;
    let off = linalg::project_columns_complement(support0, cert.q.as_ref())?;
    let s5 = linalg::l2inf_norm(off.as_ref());

    let s1 = relative(s1_abs, uv_norm);
    let s2 = relative(s2_abs, uv_norm);
    let s3 = relative(s3_abs, linalg::frobenius_norm(lh.as_ref()));
    Ok(DualChecks {
        s1,
        s2,
        s3,
        s4,
        s5,
        s1_abs,
        s2_abs,
        s3_abs,
        lambda,
        equality_tol,
        passed: s1 <= equality_tol && s2 <= equality_tol && s3 <= equality_tol && s4 < 1.0 && s5 < lambda,
    })
}
