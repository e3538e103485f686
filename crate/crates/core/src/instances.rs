//! Instance generators and the reduction of a discrete IMSE criterion to an
//! `A_K` criterion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::DesignProblem;

/// Noise level `σ_N²` used by both benchmark families.
pub const DEFAULT_SIGMA2N: f64 = 0.01;

/// Largest grid accepted by [`gen_quadreg`].
pub const MAX_GRID_POINTS: usize = 1 << 26;

/// Gaussian regression matrix with `K = Σ = I_n` and `σ_N² = 0.01`.
///
/// The entries are drawn row by row from a ChaCha8 stream keyed on both the
/// seed and the shape, so two shapes never share a prefix of draws.
pub fn gen_random(m: usize, n: usize, seed: u64) -> Result<DesignProblem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "m and n must be positive (m={m}, n={n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) ^ n as u64);
    let a = DMatrix::from_row_iterator(
        m,
        n,
        (0..m * n).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    DesignProblem::with_identity_prior(a, DEFAULT_SIGMA2N)
}

/// Number of quadratic-regression features in dimension `d`.
pub fn quadreg_features(d: usize) -> usize {
    1 + d + d * (d + 1) / 2
}

/// Feature row `[1, x_1..x_d, (x_i x_j)_{i≤j}]`, products in lexicographic order.
pub fn quadreg_row(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut row = Vec::with_capacity(quadreg_features(d));
    row.push(1.0);
    row.extend_from_slice(x);
    for i in 0..d {
        for j in i..d {
            row.push(x[i] * x[j]);
        }
    }
    row
}

/// Quadratic regression over a regular grid of `[−1, 1]^d`.
///
/// Grid points are enumerated with the first coordinate varying slowest.
pub fn gen_quadreg(d: usize, points_per_dim: usize) -> Result<DesignProblem> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    if points_per_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points per axis, got {points_per_dim}"
        )));
    }
    let m = u32::try_from(d)
        .ok()
        .and_then(|d| points_per_dim.checked_pow(d))
        .filter(|m| *m <= MAX_GRID_POINTS)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "grid {points_per_dim}^{d} exceeds {MAX_GRID_POINTS} points"
            ))
        })?;
    let n = quadreg_features(d);
    let step = 2.0 / (points_per_dim - 1) as f64;
    let axis: Vec<f64> = (0..points_per_dim)
        .map(|i| {
            if i + 1 == points_per_dim {
                1.0
            } else {
                -1.0 + step * i as f64
            }
        })
        .collect();

    let mut a = DMatrix::zeros(m, n);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for row in 0..m {
        let mut rem = row;
        for c in (0..d).rev() {
            idx[c] = rem % points_per_dim;
            rem /= points_per_dim;
        }
        for c in 0..d {
            x[c] = axis[idx[c]];
        }
        for (j, v) in quadreg_row(&x).into_iter().enumerate() {
            a[(row, j)] = v;
        }
    }
    DesignProblem::with_identity_prior(a, DEFAULT_SIGMA2N)
}

/// A finite quadrature `Σ_j μ_j φ(x_j) φ(x_j)ᵀ` of the prediction moment matrix.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    points: DMatrix<f64>,
    weights: DVector<f64>,
}

impl QuadratureSpec {
    /// `points` is q×n with row `j` equal to `φ(x_j)ᵀ`; `weights` has length q.
    pub fn new(points: DMatrix<f64>, weights: DVector<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "quadrature needs at least one node".into(),
            ));
        }
        if weights.len() != points.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} nodes",
                weights.len(),
                points.nrows()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || points.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "quadrature weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `Q = Σ_j μ_j φ_j φ_jᵀ`.
    pub fn moment_matrix(&self) -> DMatrix<f64> {
        let mut weighted = self.points.clone();
        for (mut row, mu) in weighted.row_iter_mut().zip(self.weights.iter()) {
            row *= *mu;
        }
        let q = self.points.transpose() * weighted;
        (&q + q.transpose()) * 0.5
    }
}

/// A factor `K` (n×r) with `KKᵀ ≈ Q`, dropping eigenvalues below `rank_tol·λ_max`.
///
/// Columns follow decreasing eigenvalue; each eigenvector is signed so that
/// its first non-negligible entry is positive.
#[allow(non_snake_case)]
pub fn imse_to_K(quad: &QuadratureSpec, rank_tol: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(Error::InvalidArgument(format!(
            "rank_tol must be in [0, 1), got {rank_tol}"
        )));
    }
    let q = quad.moment_matrix();
    let n = q.nrows();
    let eig = SymmetricEigen::new(q);
    let lambda_max = eig.eigenvalues.max();
    if !(lambda_max > 0.0) || lambda_max <= f64::EPSILON * eig.eigenvalues.amax() {
        return Err(Error::DegenerateQuadrature(
            "moment matrix is numerically zero".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > rank_tol * lambda_max && eig.eigenvalues[i] > 0.0)
        .collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut k = DMatrix::zeros(n, order.len());
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        let cut = 1e-12 * v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > cut) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        k.set_column(col, &(v * eig.eigenvalues[i].sqrt()));
    }
    Ok(k)
}
