//! Inexact augmented-Lagrangian ADMM for
//!
//! ```text
//! min ‖Z‖* + λ‖C‖₂,₁   s.t.  X = XZ + C
//! ```
//!
//! and for the oracle variant that additionally constrains `V₀V₀ᵀZ = Z` and
//! `P_{I₀}(C) = C`.
//!
//! Both programs are run through one splitting. With `Z = B·W` for a fixed
//! orthonormal basis `B` (the row space of `X` for the plain program, `V₀` for
//! the oracle) and `C = U·E` for a fixed orthonormal `U`, the constraint takes
//! the form `T = D·W + E` and the iteration is
//!
//! ```text
//! J ← svt(W + Y₂/μ, 1/μ)
//! W ← (DᵀD + I)⁻¹ (Dᵀ(T − E + Y₁/μ) + J − Y₂/μ)
//! E ← column_shrink(T − DW + Y₁/μ, λ/μ)          (then zeroed off-support)
//! Y₁ += μ(T − DW − E),  Y₂ += μ(W − J),  μ ← min(ρμ, μ_max)
//! ```
//!
//! Optimal `Z` always lies in the row space of `X`, and every feasible `C`
//! lies in its column space, so restricting to `B = V_X`, `U = U_X` loses
//! nothing and shrinks the per-iteration SVD from `n×n` to `rank(X)×n`.
//! [`SolverForm::Full`] runs the same iteration on the untransformed program.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::linalg::{
    self, column_norms, column_shrink, ensure_finite, l21_norm, max_abs, spd_inverse, svt_with_rank,
    ColumnSupport, DenseMatrix, DEFAULT_RANK_REL_TOL,
};

/// Which variables the ADMM iterates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverForm {
    /// Row-space coordinates: `Z = V_X W`, `C = U_X E`.
    #[default]
    RowSpace,
    /// The program as written, with `Z` an `n×n` unknown.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub tol_primal: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub form: SolverForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            mu0: 1e-6,
            rho: 1.03,
            mu_max: 1e10,
            tol_primal: 1e-8,
            max_iters: 5000,
            form: SolverForm::RowSpace,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.lambda.is_finite()
            && self.rho > 1.0
            && self.mu0 > 0.0
            && self.mu0 < self.mu_max
            && self.tol_primal > 0.0
            && self.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(LrrError::InvalidInput(format!("invalid solver config: {self:?}")))
        }
    }
}

/// Output of [`solve_lrr`].
#[derive(Debug, Clone)]
pub struct LrrSolution {
    /// `n×n` coefficient matrix `Z*`.
    pub z: DenseMatrix,
    /// `d×n` outlier matrix `C*`.
    pub c: DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// `(‖X − XZ − C‖_max, ‖Z − J‖_max)` at the returned iterate.
    pub final_residuals: (f64, f64),
    /// `‖Z‖* + λ‖C‖₂,₁`.
    pub objective: f64,
}

/// Output of [`solve_oracle`].
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub z_hat: DenseMatrix,
    pub c_hat: DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub final_residuals: (f64, f64),
    pub objective: f64,
}

/// `DᵀD + I` inverse, kept diagonal when `D` is.
enum Dictionary {
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
}

impl Dictionary {
    fn apply(&self, w: MatRef<'_, f64>) -> DenseMatrix {
        match self {
            Dictionary::Diagonal(d) => linalg::scale_rows(w, d),
            Dictionary::Dense(d) => d * w,
        }
    }

    fn apply_transpose(&self, m: MatRef<'_, f64>) -> DenseMatrix {
        match self {
            Dictionary::Diagonal(d) => linalg::scale_rows(m, d),
            Dictionary::Dense(d) => d.transpose() * m,
        }
    }
}

struct Program {
    target: DenseMatrix,
    dict: Dictionary,
    /// `Z = lift_z · W`; `None` means identity.
    lift_z: Option<DenseMatrix>,
    /// `C = lift_c · E`; `None` means identity.
    lift_c: Option<DenseMatrix>,
    support: Option<Vec<bool>>,
}

struct Iterate {
    w: DenseMatrix,
    j: DenseMatrix,
    e: DenseMatrix,
    iterations: usize,
    converged: bool,
}

impl Program {
    fn unknowns(&self) -> usize {
        match &self.dict {
            Dictionary::Diagonal(d) => d.len(),
            Dictionary::Dense(d) => d.ncols(),
        }
    }

    fn normal_inverse(&self) -> Result<Normal> {
        Ok(match &self.dict {
            Dictionary::Diagonal(d) => Normal::Diagonal(d.iter().map(|s| 1.0 / (1.0 + s * s)).collect()),
            Dictionary::Dense(d) => {
                let mut g = d.transpose() * d;
                for i in 0..g.nrows() {
                    g[(i, i)] += 1.0;
                }
                Normal::Dense(spd_inverse(g.as_ref())?)
            }
        })
    }

    /// Residual size as seen in the lifted (original) coordinates. A lift by an
    /// orthonormal basis bounds every entry of `B·M` by the matching column
    /// norm of `M`.
    fn lifted_residual(m: MatRef<'_, f64>, lifted: bool) -> f64 {
        if lifted {
            column_norms(m).into_iter().fold(0.0, f64::max)
        } else {
            max_abs(m)
        }
    }

    fn run(&self, config: &SolverConfig) -> Result<Iterate> {
        let (m, n) = (self.target.nrows(), self.target.ncols());
        let k = self.unknowns();
        let normal = self.normal_inverse()?;
        let lambda = config.lambda;

        let mut w = Mat::<f64>::zeros(k, n);
        let mut j = Mat::<f64>::zeros(k, n);
        let mut e = Mat::<f64>::zeros(m, n);
        let mut y1 = Mat::<f64>::zeros(m, n);
        let mut y2 = Mat::<f64>::zeros(k, n);
        let mut mu = config.mu0;

        for iter in 1..=config.max_iters {
            let inv_mu = 1.0 / mu;

            (j, _) = svt_with_rank(linalg::axpy(w.as_ref(), inv_mu, y2.as_ref()).as_ref(), inv_mu)?;

            let rhs_t = Mat::from_fn(m, n, |a, b| self.target[(a, b)] - e[(a, b)] + inv_mu * y1[(a, b)]);
            let mut rhs = self.dict.apply_transpose(rhs_t.as_ref());
            for b in 0..n {
                for a in 0..k {
                    rhs[(a, b)] += j[(a, b)] - inv_mu * y2[(a, b)];
                }
            }
            w = normal.solve(rhs.as_ref());

            let dw = self.dict.apply(w.as_ref());
            let shrink_in = Mat::from_fn(m, n, |a, b| self.target[(a, b)] - dw[(a, b)] + inv_mu * y1[(a, b)]);
            e = column_shrink(shrink_in.as_ref(), lambda * inv_mu)?;
            if let Some(mask) = &self.support {
                for (b, &keep) in mask.iter().enumerate() {
                    if !keep {
                        e.col_mut(b).fill(0.0);
                    }
                }
            }

            let r1 = Mat::from_fn(m, n, |a, b| self.target[(a, b)] - dw[(a, b)] - e[(a, b)]);
            let r2 = linalg::axpy(w.as_ref(), -1.0, j.as_ref());
            let stop1 = Self::lifted_residual(r1.as_ref(), self.lift_c.is_some());
            let stop2 = Self::lifted_residual(r2.as_ref(), self.lift_z.is_some());

            if stop1 <= config.tol_primal && stop2 <= config.tol_primal {
                return Ok(Iterate {
                    w,
                    j,
                    e,
                    iterations: iter,
                    converged: true,
                });
            }

            for b in 0..n {
                for a in 0..m {
                    y1[(a, b)] += mu * r1[(a, b)];
                }
                for a in 0..k {
                    y2[(a, b)] += mu * r2[(a, b)];
                }
            }
            mu = (mu * config.rho).min(config.mu_max);

            if iter % 100 == 0 {
                log::debug!("admm iter {iter}: mu={mu:.3e} r1={stop1:.3e} r2={stop2:.3e}");
            }
        }
        Ok(Iterate {
            w,
            j,
            e,
            iterations: config.max_iters,
            converged: false,
        })
    }

    fn lift(&self, w: MatRef<'_, f64>, e: MatRef<'_, f64>) -> (DenseMatrix, DenseMatrix) {
        let z = match &self.lift_z {
            Some(b) => b * w,
            None => w.to_owned(),
        };
        let c = match &self.lift_c {
            Some(u) => u * e,
            None => e.to_owned(),
        };
        (z, c)
    }
}

enum Normal {
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
}

impl Normal {
    fn solve(&self, rhs: MatRef<'_, f64>) -> DenseMatrix {
        match self {
            Normal::Diagonal(d) => linalg::scale_rows(rhs, d),
            Normal::Dense(inv) => inv * rhs,
        }
    }
}

struct Outcome {
    z: DenseMatrix,
    c: DenseMatrix,
    iterations: usize,
    converged: bool,
    final_residuals: (f64, f64),
    objective: f64,
}

fn finish(x: MatRef<'_, f64>, program: &Program, it: Iterate, lambda: f64) -> Result<Outcome> {
    let (z, c) = program.lift(it.w.as_ref(), it.e.as_ref());
    let xz = x * &z;
    let feas = Mat::from_fn(x.nrows(), x.ncols(), |a, b| x[(a, b)] - xz[(a, b)] - c[(a, b)]);
    let gap = linalg::axpy(it.w.as_ref(), -1.0, it.j.as_ref());
    let split = match &program.lift_z {
        Some(b) => max_abs((b * &gap).as_ref()),
        None => max_abs(gap.as_ref()),
    };
    // ‖B·W‖* = ‖W‖* for orthonormal B.
    let nuclear = linalg::nuclear_norm(it.w.as_ref())?;
    let objective = nuclear + lambda * l21_norm(c.as_ref());
    Ok(Outcome {
        z,
        c,
        iterations: it.iterations,
        converged: it.converged,
        final_residuals: (max_abs(feas.as_ref()), split),
        objective,
    })
}

fn check_input(x: MatRef<'_, f64>) -> Result<()> {
    ensure_finite(x)?;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(LrrError::InvalidInput("empty data matrix".into()));
    }
    if max_abs(x) == 0.0 {
        return Err(LrrError::InvalidInput("data matrix is zero".into()));
    }
    Ok(())
}

fn row_space_program(x: MatRef<'_, f64>) -> Result<(linalg::SvdFactors, DenseMatrix)> {
    let f = linalg::svd(x, DEFAULT_RANK_REL_TOL)?;
    // T = U_rᵀ X = Σ_r V_rᵀ
    let target = linalg::scale_rows(f.v_r().transpose(), f.sigma_r());
    Ok((f, target))
}

/// Solves the low-rank representation program for data matrix `x` (`d×n`).
pub fn solve_lrr(x: MatRef<'_, f64>, config: &SolverConfig) -> Result<LrrSolution> {
    config.validate()?;
    check_input(x)?;
    let program = match config.form {
        SolverForm::RowSpace => {
            let (f, target) = row_space_program(x)?;
            Program {
                target,
                dict: Dictionary::Diagonal(f.sigma_r().to_vec()),
                lift_z: Some(f.v_r().to_owned()),
                lift_c: Some(f.u_r().to_owned()),
                support: None,
            }
        }
        SolverForm::Full => Program {
            target: x.to_owned(),
            dict: Dictionary::Dense(x.to_owned()),
            lift_z: None,
            lift_c: None,
            support: None,
        },
    };
    let it = program.run(config)?;
    let out = finish(x, &program, it, config.lambda)?;
    Ok(LrrSolution {
        z: out.z,
        c: out.c,
        iterations: out.iterations,
        converged: out.converged,
        final_residuals: out.final_residuals,
        objective: out.objective,
    })
}

/// Solves the oracle program: the same objective restricted to `Z` with
/// column space in `span(v0)` and `C` supported on `support0`.
pub fn solve_oracle(
    x: MatRef<'_, f64>,
    v0: MatRef<'_, f64>,
    support0: &ColumnSupport,
    config: &SolverConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    check_input(x)?;
    if v0.nrows() != x.ncols() {
        return Err(LrrError::mismatch("solve_oracle: v0 rows", x.ncols(), v0.nrows()));
    }
    if support0.universe() != x.ncols() {
        return Err(LrrError::mismatch("solve_oracle: support", x.ncols(), support0.universe()));
    }
    if linalg::orthonormality_defect(v0) > 1e-8 {
        return Err(LrrError::InvalidInput("v0 is not column-orthonormal".into()));
    }
    let program = match config.form {
        SolverForm::RowSpace => {
            let (f, target) = row_space_program(x)?;
            // D = U_rᵀ X V₀ = Σ_r V_rᵀ V₀
            let dict = target.as_ref() * v0;
            Program {
                target,
                dict: Dictionary::Dense(dict),
                lift_z: Some(v0.to_owned()),
                lift_c: Some(f.u_r().to_owned()),
                support: Some(support0.mask()),
            }
        }
        SolverForm::Full => Program {
            target: x.to_owned(),
            dict: Dictionary::Dense(x * v0),
            lift_z: Some(v0.to_owned()),
            lift_c: None,
            support: Some(support0.mask()),
        },
    };
    let it = program.run(config)?;
    let out = finish(x, &program, it, config.lambda)?;
    Ok(OracleSolution {
        z_hat: out.z,
        c_hat: out.c,
        iterations: out.iterations,
        converged: out.converged,
        final_residuals: out.final_residuals,
        objective: out.objective,
    })
}
