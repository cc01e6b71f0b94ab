//! Seeded synthetic instances `X = X₀ + C₀`: samples drawn from a union of
//! low-dimensional subspaces, plus Gaussian outlier columns.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with the 64-bit `seed` of the
//! spec. Draw order within one instance is fixed: subspace bases (and the
//! rotation), coefficient blocks in subspace order, outlier positions, outlier
//! entries. All matrices are filled column-major. Independent streams for
//! experiment cells come from [`derive_seed`].

use faer::{Mat, MatRef};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::linalg::{self, ColumnSupport, DenseMatrix, DEFAULT_RANK_REL_TOL};

/// How subspace bases are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// `U₁` random, `Uᵢ₊₁ = T Uᵢ` for one random rotation `T`.
    RotationChain,
    /// Each basis drawn independently; needs `k·dim ≤ d`.
    IndependentRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum OutlierStd {
    /// Standard deviation equal to the mean absolute sample entry.
    Matched,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub ambient_dim: usize,
    pub num_subspaces: usize,
    pub subspace_dim: usize,
    pub samples_per_subspace: usize,
    pub num_outliers: usize,
    pub outlier_std: OutlierStd,
    pub construction: Construction,
    pub seed: u64,
}

impl GenSpec {
    /// The synthetic protocol: 5 subspaces of dimension 5 in `R^500`, 40
    /// samples each, rotation chain, matched outlier magnitude.
    pub fn standard(num_outliers: usize, seed: u64) -> Self {
        Self {
            ambient_dim: 500,
            num_subspaces: 5,
            subspace_dim: 5,
            samples_per_subspace: 40,
            num_outliers,
            outlier_std: OutlierStd::Matched,
            construction: Construction::RotationChain,
            seed,
        }
    }

    pub fn num_authentic(&self) -> usize {
        self.num_subspaces * self.samples_per_subspace
    }

    pub fn num_columns(&self) -> usize {
        self.num_authentic() + self.num_outliers
    }

    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim == 0 || self.num_subspaces == 0 || self.subspace_dim == 0 || self.samples_per_subspace == 0 {
            return Err(LrrError::InfeasibleSpec("all counts must be positive".into()));
        }
        if self.subspace_dim > self.ambient_dim {
            return Err(LrrError::InfeasibleSpec(format!(
                "subspace dim {} exceeds ambient dim {}",
                self.subspace_dim, self.ambient_dim
            )));
        }
        if self.construction == Construction::IndependentRandom
            && self.num_subspaces * self.subspace_dim > self.ambient_dim
        {
            return Err(LrrError::InfeasibleSpec(format!(
                "{} independent subspaces of dim {} do not fit in dimension {}",
                self.num_subspaces, self.subspace_dim, self.ambient_dim
            )));
        }
        if let OutlierStd::Explicit(s) = self.outlier_std {
            if !(s.is_finite() && s >= 0.0) {
                return Err(LrrError::InfeasibleSpec(format!("outlier std {s}")));
            }
        }
        Ok(())
    }
}

/// Number of outliers that gives outlier fraction `gamma` when added to
/// `authentic` samples, rounded to nearest.
pub fn outliers_for_fraction(authentic: usize, gamma: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(LrrError::InvalidInput(format!("outlier fraction {gamma} not in [0, 1)")));
    }
    Ok((authentic as f64 * gamma / (1.0 - gamma)).round() as usize)
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: DenseMatrix,
    pub x0: DenseMatrix,
    pub c0: DenseMatrix,
    pub support0: ColumnSupport,
    /// Subspace index of each authentic column, in column order.
    pub labels: Vec<usize>,
    /// Orthonormal basis of the row space of `x0`.
    pub v0: DenseMatrix,
}

impl ProblemInstance {
    /// Assembles an instance from its ground-truth parts, checking the zero
    /// patterns and computing `x` and `v0`.
    pub fn from_parts(x0: DenseMatrix, c0: DenseMatrix, support0: ColumnSupport, labels: Vec<usize>) -> Result<Self> {
        if x0.nrows() != c0.nrows() || x0.ncols() != c0.ncols() {
            return Err(LrrError::mismatch(
                "instance: c0 shape",
                format!("{}x{}", x0.nrows(), x0.ncols()),
                format!("{}x{}", c0.nrows(), c0.ncols()),
            ));
        }
        if support0.universe() != x0.ncols() {
            return Err(LrrError::mismatch("instance: support universe", x0.ncols(), support0.universe()));
        }
        if labels.len() != x0.ncols() - support0.len() {
            return Err(LrrError::mismatch(
                "instance: labels",
                x0.ncols() - support0.len(),
                labels.len(),
            ));
        }
        linalg::ensure_finite(x0.as_ref())?;
        linalg::ensure_finite(c0.as_ref())?;
        for j in 0..x0.ncols() {
            let zero = if support0.contains(j) { &x0 } else { &c0 };
            if zero.col(j).iter().any(|&v| v != 0.0) {
                return Err(LrrError::InvalidInput(format!(
                    "column {j}: x0 and c0 must have disjoint column supports"
                )));
            }
        }
        let x = &x0 + &c0;
        let v0 = linalg::row_space_basis(x0.as_ref(), DEFAULT_RANK_REL_TOL)?;
        Ok(Self {
            x,
            x0,
            c0,
            support0,
            labels,
            v0,
        })
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Outlier fraction `|I₀|/n`.
    pub fn gamma(&self) -> f64 {
        self.support0.fraction()
    }

    pub fn rank0(&self) -> usize {
        self.v0.ncols()
    }

    /// Authentic column indices, in order; aligned with `labels`.
    pub fn authentic_columns(&self) -> Vec<usize> {
        self.support0.complement().indices().to_vec()
    }

    /// Same instance with `c0` rescaled so that `‖C₀‖ = ratio·‖X₀‖`.
    /// With `ratio = 0`, the outlier columns become zero but stay in `support0`.
    pub fn with_outlier_ratio(&self, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(LrrError::InvalidInput(format!("magnitude ratio {ratio}")));
        }
        let nx0 = linalg::spectral_norm(self.x0.as_ref())?;
        let nc0 = linalg::spectral_norm(self.c0.as_ref())?;
        let factor = if nc0 > 0.0 { ratio * nx0 / nc0 } else { 0.0 };
        let c0 = linalg::scaled(self.c0.as_ref(), factor);
        let x = &self.x0 + &c0;
        Ok(Self {
            x,
            x0: self.x0.clone(),
            c0,
            support0: self.support0.clone(),
            labels: self.labels.clone(),
            v0: self.v0.clone(),
        })
    }
}

/// Seed for stream `stream` of master seed `master`: the first output of the
/// master generator switched to that stream.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = Mat::<f64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

fn uniform_pm1(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = Mat::<f64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.random_range(-1.0..=1.0);
        }
    }
    m
}

/// Orthonormal basis of a Gaussian `d×k` matrix, signs fixed so that the
/// triangular factor has a positive diagonal.
fn random_orthonormal(rng: &mut impl Rng, d: usize, k: usize) -> DenseMatrix {
    let g = gaussian(rng, d, k);
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Haar-distributed rotation of `R^d` (orthogonal, determinant `+1`).
fn random_rotation(rng: &mut impl Rng, d: usize) -> DenseMatrix {
    let mut q = random_orthonormal(rng, d, d);
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Mean of `|x0_ij|` over authentic (off-support) columns.
pub fn mean_abs_sample_magnitude(x0: MatRef<'_, f64>, support0: &ColumnSupport) -> Result<f64> {
    if support0.universe() != x0.ncols() {
        return Err(LrrError::mismatch("mean_abs_sample_magnitude", x0.ncols(), support0.universe()));
    }
    let cols = support0.complement();
    if cols.is_empty() || x0.nrows() == 0 {
        return Err(LrrError::InvalidInput("no authentic columns".into()));
    }
    let total: f64 = cols
        .indices()
        .iter()
        .map(|&j| x0.col(j).iter().map(|v| v.abs()).sum::<f64>())
        .sum();
    Ok(total / (cols.len() * x0.nrows()) as f64)
}

/// Draws an instance according to `spec`.
pub fn generate(spec: &GenSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d, k, dim) = (spec.ambient_dim, spec.num_subspaces, spec.subspace_dim);

    let bases: Vec<DenseMatrix> = match spec.construction {
        Construction::RotationChain => {
            let u1 = random_orthonormal(&mut rng, d, dim);
            let t = random_rotation(&mut rng, d);
            let mut out = vec![u1];
            for i in 1..k {
                let next = &t * &out[i - 1];
                out.push(next);
            }
            out
        }
        Construction::IndependentRandom => (0..k).map(|_| random_orthonormal(&mut rng, d, dim)).collect(),
    };

    let per = spec.samples_per_subspace;
    let na = spec.num_authentic();
    let mut samples = Mat::<f64>::zeros(d, na);
    let mut sample_labels = Vec::with_capacity(na);
    for (i, u) in bases.iter().enumerate() {
        let r = uniform_pm1(&mut rng, dim, per);
        let block = u * &r;
        samples.as_mut().subcols_mut(i * per, per).copy_from(&block);
        sample_labels.extend(std::iter::repeat_n(i, per));
    }

    let n = spec.num_columns();
    let mut outlier_pos = sample_indices(&mut rng, n, spec.num_outliers).into_vec();
    outlier_pos.sort_unstable();
    let support0 = ColumnSupport::new(outlier_pos, n)?;

    let std = match spec.outlier_std {
        OutlierStd::Matched => mean_abs_sample_magnitude(samples.as_ref(), &ColumnSupport::empty(na))?,
        OutlierStd::Explicit(s) => s,
    };
    let noise = gaussian(&mut rng, d, spec.num_outliers);

    let mut x0 = Mat::<f64>::zeros(d, n);
    let mut c0 = Mat::<f64>::zeros(d, n);
    let (mut next_sample, mut next_outlier) = (0, 0);
    for j in 0..n {
        if support0.contains(j) {
            for i in 0..d {
                c0[(i, j)] = std * noise[(i, next_outlier)];
            }
            next_outlier += 1;
        } else {
            x0.col_mut(j).copy_from(samples.col(next_sample));
            next_sample += 1;
        }
    }
    ProblemInstance::from_parts(x0, c0, support0, sample_labels)
}

/// Dependent but pairwise disjoint scenario: 11 random 20-dimensional
/// subspaces of `R^200` (total dimension 220), 20 samples each, no outliers.
pub fn generate_disjoint_dependent(seed: u64) -> Result<ProblemInstance> {
    const D: usize = 200;
    const K: usize = 11;
    const DIM: usize = 20;
    const PER: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = Vec::with_capacity(K);
    while bases.len() < K {
        let u = random_orthonormal(&mut rng, D, DIM);
        // Disjointness holds with probability one; redraw on the off chance.
        let disjoint = bases.iter().all(|b: &DenseMatrix| {
            let stacked = linalg::hstack(b.as_ref(), u.as_ref()).expect("equal row counts");
            linalg::column_space_basis(stacked.as_ref(), DEFAULT_RANK_REL_TOL)
                .map(|q| q.ncols() == 2 * DIM)
                .unwrap_or(false)
        });
        if disjoint {
            bases.push(u);
        }
    }
    let mut x0 = Mat::<f64>::zeros(D, K * PER);
    let mut labels = Vec::with_capacity(K * PER);
    for (i, u) in bases.iter().enumerate() {
        let r = uniform_pm1(&mut rng, DIM, PER);
        x0.as_mut().subcols_mut(i * PER, PER).copy_from(&(u * &r));
        labels.extend(std::iter::repeat_n(i, PER));
    }
    let n = x0.ncols();
    ProblemInstance::from_parts(x0, Mat::zeros(D, n), ColumnSupport::empty(n), labels)
}
