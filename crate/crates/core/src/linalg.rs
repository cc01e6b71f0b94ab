//! Dense linear algebra primitives: factorizations, matrix norms, the
//! projection operators used throughout the recovery analysis, and the two
//! proximal maps (singular value thresholding and column shrinkage) the
//! solver is built on.
//!
//! Conventions: `P_U(M) = U Uᵀ M` projects onto a column space, `P_V(M) = M V Vᵀ`
//! onto a row space, and `P_V^L(M) = V Vᵀ M` applies a row-space projector from
//! the left. Bases are always passed explicitly as column-orthonormal matrices,
//! never as assembled projectors.

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};

/// Row-major-agnostic dense `f64` matrix. All entries are expected finite;
/// entry points that accept user data check this with [`ensure_finite`].
pub type DenseMatrix = Mat<f64>;

/// Default relative threshold for numerical rank: `sigma_i > tol * sigma_0`.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-9;

/// Thin singular value decomposition with a numerical rank.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    pub rank: usize,
}

impl SvdFactors {
    /// Left singular vectors spanning the numerical column space.
    pub fn u_r(&self) -> MatRef<'_, f64> {
        self.u.as_ref().subcols(0, self.rank)
    }

    /// Right singular vectors spanning the numerical row space.
    pub fn v_r(&self) -> MatRef<'_, f64> {
        self.v.as_ref().subcols(0, self.rank)
    }

    pub fn sigma_r(&self) -> &[f64] {
        &self.sigma[..self.rank]
    }

    /// `U_r diag(sigma_r) V_rᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let scaled = scale_columns(self.u_r(), self.sigma_r());
        scaled * self.v_r().transpose()
    }
}

/// Sorted set of column indices into a matrix with `universe` columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSupport {
    indices: Vec<usize>,
    universe: usize,
}

impl ColumnSupport {
    /// Builds a support from arbitrary indices; duplicates are merged.
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= universe) {
            return Err(LrrError::IndexOutOfRange {
                index: bad,
                cols: universe,
            });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices, universe })
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            indices: Vec::new(),
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            indices: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
            universe: mask.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    pub fn complement(&self) -> Self {
        let mask = self.mask();
        Self {
            indices: (0..self.universe).filter(|&i| !mask[i]).collect(),
            universe: self.universe,
        }
    }

    /// Fraction of columns in the support.
    pub fn fraction(&self) -> f64 {
        if self.universe == 0 {
            0.0
        } else {
            self.len() as f64 / self.universe as f64
        }
    }
}

pub fn ensure_finite(m: MatRef<'_, f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(LrrError::InvalidInput(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn ensure_same_rows(op: &'static str, a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(LrrError::mismatch(op, a.nrows(), b.nrows()));
    }
    Ok(())
}

/// Thin SVD with rank `#{i : sigma_i > rank_rel_tol * sigma_0}`.
pub fn svd(m: MatRef<'_, f64>, rank_rel_tol: f64) -> Result<SvdFactors> {
    ensure_finite(m)?;
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(SvdFactors {
            u: Mat::zeros(m.nrows(), 0),
            sigma: Vec::new(),
            v: Mat::zeros(m.ncols(), 0),
            rank: 0,
        });
    }
    let f = m
        .thin_svd()
        .map_err(|e| LrrError::Numerical(format!("svd did not converge: {e:?}")))?;
    let s = f.S().column_vector();
    let mut sigma: Vec<f64> = (0..k).map(|i| s[i].max(0.0)).collect();
    let mut u = f.U().to_owned();
    let mut v = f.V().to_owned();
    // faer returns nonincreasing values already; enforce it in case of ties
    // reordered by rounding.
    if sigma.windows(2).any(|w| w[0] < w[1]) {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        let u_old = u.clone();
        let v_old = v.clone();
        u = Mat::from_fn(u_old.nrows(), k, |i, j| u_old[(i, order[j])]);
        v = Mat::from_fn(v_old.nrows(), k, |i, j| v_old[(i, order[j])]);
        sigma = order.iter().map(|&i| sigma[i]).collect();
    }
    let rank = numerical_rank(&sigma, rank_rel_tol);
    Ok(SvdFactors { u, sigma, v, rank })
}

pub fn numerical_rank(sigma: &[f64], rank_rel_tol: f64) -> usize {
    match sigma.first() {
        Some(&s0) if s0 > 0.0 => sigma.iter().filter(|&&s| s > rank_rel_tol * s0).count(),
        _ => 0,
    }
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut s = m
        .singular_values()
        .map_err(|e| LrrError::Numerical(format!("svd did not converge: {e:?}")))?;
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Orthonormal basis of the column space of `m` at the given rank tolerance.
pub fn column_space_basis(m: MatRef<'_, f64>, rank_rel_tol: f64) -> Result<DenseMatrix> {
    let f = svd(m, rank_rel_tol)?;
    Ok(f.u_r().to_owned())
}

/// Orthonormal basis of the row space of `m` (columns span `span(mᵀ)`).
pub fn row_space_basis(m: MatRef<'_, f64>, rank_rel_tol: f64) -> Result<DenseMatrix> {
    let f = svd(m, rank_rel_tol)?;
    Ok(f.v_r().to_owned())
}

pub fn nuclear_norm(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

pub fn spectral_norm(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius_norm(m: MatRef<'_, f64>) -> f64 {
    m.norm_l2()
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    m.norm_max()
}

pub fn column_norms(m: MatRef<'_, f64>) -> Vec<f64> {
    (0..m.ncols()).map(|j| m.col(j).norm_l2()).collect()
}

/// Sum of column ℓ2 norms, `‖M‖₂,₁`.
pub fn l21_norm(m: MatRef<'_, f64>) -> f64 {
    column_norms(m).iter().sum()
}

/// Largest column ℓ2 norm, `‖M‖₂,∞`.
pub fn l2inf_norm(m: MatRef<'_, f64>) -> f64 {
    column_norms(m).into_iter().fold(0.0, f64::max)
}

/// Frobenius inner product `⟨A, B⟩ = tr(AᵀB)`.
pub fn inner(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(i, j)];
        }
    }
    acc
}

/// Multiplies column `j` of `m` by `s[j]`.
pub fn scale_columns(m: MatRef<'_, f64>, s: &[f64]) -> DenseMatrix {
    debug_assert_eq!(m.ncols(), s.len());
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s[j])
}

/// Multiplies row `i` of `m` by `s[i]`.
pub fn scale_rows(m: MatRef<'_, f64>, s: &[f64]) -> DenseMatrix {
    debug_assert_eq!(m.nrows(), s.len());
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s[i])
}

/// Entrywise `a + alpha * b`.
pub fn axpy(a: MatRef<'_, f64>, alpha: f64, b: MatRef<'_, f64>) -> DenseMatrix {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + alpha * b[(i, j)])
}

pub fn scaled(a: MatRef<'_, f64>, alpha: f64) -> DenseMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| alpha * a[(i, j)])
}

/// Column-orthonormality defect `‖BᵀB − I‖_max`.
pub fn orthonormality_defect(b: MatRef<'_, f64>) -> f64 {
    let g = b.transpose() * b;
    let k = b.ncols();
    let mut worst: f64 = 0.0;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// `P_U(M) = U Uᵀ M`.
pub fn project_column_space(basis_u: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    ensure_same_rows("project_column_space", basis_u, m)?;
    if basis_u.ncols() == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let coeff = basis_u.transpose() * m;
    Ok(basis_u * coeff)
}

/// `P_V^L(M) = V Vᵀ M`: a row-space projector applied from the left.
pub fn project_row_space_left(basis_v: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    ensure_same_rows("project_row_space_left", basis_v, m)?;
    if basis_v.ncols() == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let coeff = basis_v.transpose() * m;
    Ok(basis_v * coeff)
}

/// `P_V(M) = M V Vᵀ`.
pub fn project_row_space(basis_v: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    if basis_v.nrows() != m.ncols() {
        return Err(LrrError::mismatch("project_row_space", m.ncols(), basis_v.nrows()));
    }
    if basis_v.ncols() == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let coeff = m * basis_v;
    Ok(coeff * basis_v.transpose())
}

/// `P_I(M)`: zeroes every column outside `support`.
pub fn project_columns(support: &ColumnSupport, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    if support.universe() != m.ncols() {
        return Err(LrrError::mismatch("project_columns", m.ncols(), support.universe()));
    }
    let mask = support.mask();
    Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        if mask[j] {
            m[(i, j)]
        } else {
            0.0
        }
    }))
}

/// `P_{I^c}(M)`.
pub fn project_columns_complement(support: &ColumnSupport, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    project_columns(&support.complement(), m)
}

/// `P_T(M) = P_U(M) + P_V(M) − P_U P_V(M)`, evaluated as `P_U(M) + P_V(M − P_U(M))`.
pub fn project_t(u: MatRef<'_, f64>, v: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    let pu = project_column_space(u, m)?;
    let rest = axpy(m, -1.0, pu.as_ref());
    let pv = project_row_space(v, rest.as_ref())?;
    Ok(axpy(pu.as_ref(), 1.0, pv.as_ref()))
}

/// `P_{T⊥}(M) = M − P_T(M)`.
pub fn project_t_perp(u: MatRef<'_, f64>, v: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    let pt = project_t(u, v, m)?;
    Ok(axpy(m, -1.0, pt.as_ref()))
}

/// Singular value thresholding, the proximal map of `tau ‖·‖*`.
pub fn svt(m: MatRef<'_, f64>, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_rank(m, tau)?.0)
}

/// [`svt`] that also reports how many singular values survived.
pub fn svt_with_rank(m: MatRef<'_, f64>, tau: f64) -> Result<(DenseMatrix, usize)> {
    if tau < 0.0 {
        return Err(LrrError::InvalidInput(format!("negative threshold {tau}")));
    }
    let k = m.nrows().min(m.ncols());
    // σ_max ≤ ‖m‖_F, so nothing survives and the SVD can be skipped.
    if k == 0 || frobenius_norm(m) <= tau {
        return Ok((Mat::zeros(m.nrows(), m.ncols()), 0));
    }
    let f = m
        .thin_svd()
        .map_err(|e| LrrError::Numerical(format!("svd did not converge: {e:?}")))?;
    let s = f.S().column_vector();
    let kept: Vec<usize> = (0..k).filter(|&i| s[i] > tau).collect();
    if kept.is_empty() {
        return Ok((Mat::zeros(m.nrows(), m.ncols()), 0));
    }
    let (u, v) = (f.U(), f.V());
    let us = Mat::from_fn(m.nrows(), kept.len(), |i, j| u[(i, kept[j])] * (s[kept[j]] - tau));
    let vk = Mat::from_fn(m.ncols(), kept.len(), |i, j| v[(i, kept[j])]);
    Ok((us * vk.transpose(), kept.len()))
}

/// Column shrinkage, the proximal map of `tau ‖·‖₂,₁`: each column `c` becomes
/// `c · max(‖c‖₂ − tau, 0) / ‖c‖₂`.
pub fn column_shrink(m: MatRef<'_, f64>, tau: f64) -> Result<DenseMatrix> {
    if tau < 0.0 {
        return Err(LrrError::InvalidInput(format!("negative threshold {tau}")));
    }
    let factors: Vec<f64> = column_norms(m)
        .into_iter()
        .map(|nrm| if nrm > tau { (nrm - tau) / nrm } else { 0.0 })
        .collect();
    Ok(scale_columns(m, &factors))
}

/// Scales supported columns to unit length and zeroes the rest.
pub fn normalize_columns_on_support(m: MatRef<'_, f64>, support: &ColumnSupport) -> Result<DenseMatrix> {
    if support.universe() != m.ncols() {
        return Err(LrrError::mismatch(
            "normalize_columns_on_support",
            m.ncols(),
            support.universe(),
        ));
    }
    let norms = column_norms(m);
    let mask = support.mask();
    let mut factors = vec![0.0; m.ncols()];
    for &i in support.indices() {
        if norms[i] <= 1e-12 {
            return Err(LrrError::DegenerateColumn(i));
        }
        factors[i] = 1.0 / norms[i];
    }
    debug_assert!(mask.iter().zip(&factors).all(|(&k, &f)| k || f == 0.0));
    Ok(scale_columns(m, &factors))
}

/// Symmetric eigendecomposition with eigenvalues in nonincreasing order.
pub fn symmetric_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, DenseMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(LrrError::mismatch("symmetric_eigen", m.nrows(), m.ncols()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LrrError::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = e.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = e.U();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok((order.iter().map(|&i| s[i]).collect(), vecs))
}

/// Inverse of a small symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: MatRef<'_, f64>) -> Result<DenseMatrix> {
    use faer::linalg::solvers::DenseSolveCore;
    let llt = m
        .llt(Side::Lower)
        .map_err(|e| LrrError::Numerical(format!("matrix not positive definite: {e:?}")))?;
    Ok(llt.inverse())
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: MatRef<'_, f64>) -> DenseMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Columns of `m` selected by index, in order.
pub fn select_columns(m: MatRef<'_, f64>, cols: &[usize]) -> DenseMatrix {
    Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Rows of `m` selected by index, in order.
pub fn select_rows(m: MatRef<'_, f64>, rows: &[usize]) -> DenseMatrix {
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// `[A B]`.
pub fn hstack(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<DenseMatrix> {
    ensure_same_rows("hstack", a, b)?;
    let ka = a.ncols();
    Ok(Mat::from_fn(a.nrows(), ka + b.ncols(), |i, j| {
        if j < ka {
            a[(i, j)]
        } else {
            b[(i, j - ka)]
        }
    }))
}

pub fn diag(values: &[f64]) -> DenseMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        column_space_basis(random(rows, cols, rng).as_ref(), 1e-12).unwrap()
    }

    fn diff_max(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
        axpy(a, -1.0, b).norm_max()
    }

    #[test]
    fn svd_identity_zero_diagonal() {
        let f = svd(Mat::<f64>::identity(3, 3).as_ref(), DEFAULT_RANK_REL_TOL).unwrap();
        assert_eq!(f.rank, 3);
        for s in &f.sigma {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-14);
        }

        let z = svd(Mat::<f64>::zeros(2, 2).as_ref(), DEFAULT_RANK_REL_TOL).unwrap();
        assert_eq!(z.rank, 0);
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        assert_eq!(z.u_r().ncols(), 0);

        let d = svd(diag(&[3.0, 2.0, 1.0]).as_ref(), DEFAULT_RANK_REL_TOL).unwrap();
        for (s, e) in d.sigma.iter().zip([3.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*s, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn svd_factor_invariants_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random(9, 5, &mut rng);
        let f = svd(m.as_ref(), DEFAULT_RANK_REL_TOL).unwrap();
        assert!(orthonormality_defect(f.u.as_ref()) < 1e-10);
        assert!(orthonormality_defect(f.v.as_ref()) < 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        let rel = axpy(f.reconstruct().as_ref(), -1.0, m.as_ref()).norm_l2() / m.norm_l2();
        assert!(rel < 1e-10, "reconstruction error {rel}");
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = Mat::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(m.as_ref(), 1e-9), Err(LrrError::InvalidInput(_))));
    }

    #[test]
    fn nuclear_norm_cases() {
        assert_abs_diff_eq!(nuclear_norm(diag(&[3.0, 2.0, 1.0]).as_ref()).unwrap(), 6.0, epsilon = 1e-13);
        assert_eq!(nuclear_norm(Mat::<f64>::zeros(3, 2).as_ref()).unwrap(), 0.0);
    }

    #[test]
    fn nuclear_norm_matches_eigen_oracle() {
        // trace(sqrt(MᵀM)) from the eigenvalues of the Gram matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random(4, 4, &mut rng);
        let gram = m.transpose() * &m;
        let (evals, _) = symmetric_eigen(gram.as_ref()).unwrap();
        let oracle: f64 = evals.iter().map(|&e| e.max(0.0).sqrt()).sum();
        assert_abs_diff_eq!(nuclear_norm(m.as_ref()).unwrap(), oracle, epsilon = 1e-8);
    }

    #[test]
    fn column_norm_cases() {
        let m = Mat::from_fn(2, 2, |i, j| [[3.0, 0.0], [4.0, 0.0]][i][j]);
        assert_abs_diff_eq!(l21_norm(m.as_ref()), 5.0);
        assert_abs_diff_eq!(l2inf_norm(m.as_ref()), 5.0);
        assert_eq!(l21_norm(Mat::<f64>::zeros(3, 3).as_ref()), 0.0);
        assert_abs_diff_eq!(l21_norm(Mat::<f64>::identity(2, 2).as_ref()), 2.0);
        assert_abs_diff_eq!(l2inf_norm(Mat::<f64>::identity(4, 4).as_ref()), 1.0);
    }

    #[test]
    fn stacked_unit_columns_l2inf_vs_spectral() {
        // k copies of one unit vector: rank-one Gram k·eeᵀ gives ‖·‖ = √k.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_orthonormal(6, 1, &mut rng);
        for k in [1usize, 4, 9] {
            let h = Mat::from_fn(6, k, |i, _| u[(i, 0)]);
            assert_abs_diff_eq!(l2inf_norm(h.as_ref()), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(spectral_norm(h.as_ref()).unwrap(), (k as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random(5, 3, &mut rng);
        let gram = m.transpose() * &m;
        let mut x = Mat::<f64>::from_fn(3, 1, |_, _| 1.0);
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let y = &gram * &x;
            lambda = y.norm_l2() / x.norm_l2();
            x = scaled(y.as_ref(), 1.0 / y.norm_l2());
        }
        assert_abs_diff_eq!(spectral_norm(m.as_ref()).unwrap(), lambda.sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(spectral_norm(diag(&[3.0, 2.0, 1.0]).as_ref()).unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn column_space_projection_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(4, 3, &mut rng);
        let id = Mat::<f64>::identity(4, 4);
        assert!(diff_max(project_column_space(id.as_ref(), m.as_ref()).unwrap().as_ref(), m.as_ref()) < 1e-15);
        let empty = Mat::<f64>::zeros(4, 0);
        assert_eq!(project_column_space(empty.as_ref(), m.as_ref()).unwrap().norm_max(), 0.0);
        let e1 = Mat::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let p = project_column_space(e1.as_ref(), m.as_ref()).unwrap();
        for j in 0..3 {
            assert_eq!(p[(0, j)], m[(0, j)]);
            for i in 1..4 {
                assert_eq!(p[(i, j)], 0.0);
            }
        }
        assert!(project_column_space(Mat::<f64>::identity(3, 3).as_ref(), m.as_ref()).is_err());
    }

    #[test]
    fn row_space_left_projection_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random(5, 5, &mut rng);
        let q = random_orthonormal(5, 5, &mut rng);
        let p = project_row_space_left(q.as_ref(), m.as_ref()).unwrap();
        assert!(diff_max(p.as_ref(), m.as_ref()) < 1e-13);
        let e1 = Mat::from_fn(5, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let p1 = project_row_space_left(e1.as_ref(), m.as_ref()).unwrap();
        assert_eq!(p1[(0, 3)], m[(0, 3)]);
        assert_eq!(p1[(2, 3)], 0.0);
        let v = random_orthonormal(5, 2, &mut rng);
        let once = project_row_space_left(v.as_ref(), m.as_ref()).unwrap();
        let twice = project_row_space_left(v.as_ref(), once.as_ref()).unwrap();
        assert!(diff_max(once.as_ref(), twice.as_ref()) < 1e-12);
    }

    #[test]
    fn column_support_projection_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random(3, 5, &mut rng);
        let n = random(5, 5, &mut rng);
        let full = ColumnSupport::full(5);
        assert_eq!(project_columns(&full, m.as_ref()).unwrap(), m);
        let none = ColumnSupport::empty(5);
        assert_eq!(project_columns(&none, m.as_ref()).unwrap().norm_max(), 0.0);
        let s = ColumnSupport::new(vec![3, 1], 5).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        let lhs = project_columns(&s, (&m * &n).as_ref()).unwrap();
        let rhs = &m * project_columns(&s, n.as_ref()).unwrap();
        assert!(diff_max(lhs.as_ref(), rhs.as_ref()) < 1e-12);
        assert!(matches!(
            ColumnSupport::new(vec![5], 5),
            Err(LrrError::IndexOutOfRange { index: 5, cols: 5 })
        ));
        let wrong = ColumnSupport::full(4);
        assert!(project_columns(&wrong, m.as_ref()).is_err());
    }

    #[test]
    fn tangent_space_projection_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random(4, 4, &mut rng);
        let id = Mat::<f64>::identity(4, 4);
        let pt = project_t(id.as_ref(), id.as_ref(), m.as_ref()).unwrap();
        assert!(diff_max(pt.as_ref(), m.as_ref()) < 1e-14);
        let empty = Mat::<f64>::zeros(4, 0);
        assert_eq!(project_t(empty.as_ref(), empty.as_ref(), m.as_ref()).unwrap().norm_max(), 0.0);
        let u = random_orthonormal(4, 2, &mut rng);
        let v = random_orthonormal(4, 1, &mut rng);
        let pt = project_t(u.as_ref(), v.as_ref(), m.as_ref()).unwrap();
        let back = project_t_perp(u.as_ref(), v.as_ref(), pt.as_ref()).unwrap();
        assert!(back.norm_max() < 1e-12);
    }

    #[test]
    fn svt_cases() {
        let out = svt(diag(&[3.0, 1.0]).as_ref(), 2.0).unwrap();
        assert!(diff_max(out.as_ref(), diag(&[1.0, 0.0]).as_ref()) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random(3, 4, &mut rng);
        assert!(diff_max(svt(m.as_ref(), 0.0).unwrap().as_ref(), m.as_ref()) < 1e-13);
        let s0 = spectral_norm(m.as_ref()).unwrap();
        assert_eq!(svt(m.as_ref(), s0).unwrap().norm_max(), 0.0);
    }

    #[test]
    fn column_shrink_cases() {
        let m = Mat::from_fn(2, 1, |i, _| [3.0, 4.0][i]);
        let out = column_shrink(m.as_ref(), 2.0).unwrap();
        assert_abs_diff_eq!(out[(0, 0)], 3.0 * 3.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[(1, 0)], 4.0 * 3.0 / 5.0, epsilon = 1e-15);
        assert_eq!(column_shrink(m.as_ref(), 0.0).unwrap(), m);
        assert_eq!(column_shrink(m.as_ref(), 5.0).unwrap().norm_max(), 0.0);
        let zero = Mat::<f64>::zeros(3, 2);
        assert_eq!(column_shrink(zero.as_ref(), 1.0).unwrap().norm_max(), 0.0);
    }

    #[test]
    fn normalize_columns_cases() {
        let m = Mat::from_fn(2, 1, |i, _| [3.0, 4.0][i]);
        let out = normalize_columns_on_support(m.as_ref(), &ColumnSupport::full(1)).unwrap();
        assert_abs_diff_eq!(out[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(out[(1, 0)], 0.8, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_orthonormal(4, 3, &mut rng);
        let s = ColumnSupport::new(vec![0, 2], 3).unwrap();
        let out = normalize_columns_on_support(u.as_ref(), &s).unwrap();
        assert!(diff_max(out.col(0).as_mat(), u.col(0).as_mat()) < 1e-15);
        assert_eq!(out.col(1).norm_max(), 0.0);
        assert_abs_diff_eq!(l2inf_norm(out.as_ref()), 1.0, epsilon = 1e-15);

        let z = Mat::<f64>::zeros(2, 2);
        assert!(matches!(
            normalize_columns_on_support(z.as_ref(), &ColumnSupport::full(2)),
            Err(LrrError::DegenerateColumn(0))
        ));
    }
}
