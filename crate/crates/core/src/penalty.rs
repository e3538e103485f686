//! The squared group-lasso penalty `g(X) = ½ (Σ_i ‖x_i‖)²` over the columns
//! of an `r×m` matrix, with its norm, dual norm, conjugate, subdifferential
//! test and proximity operator.
//!
//! The outer square couples all columns, so the proximity operator is not the
//! usual blockwise soft-thresholding. It is still available in closed form:
//! sort the columns by decreasing norm, find how many of them survive, and
//! shrink the survivors by a common amount.

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

/// An `r×m` estimator matrix whose columns are the blocks of the penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorMatrix(DMatrix<f64>);

impl EstimatorMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "estimator matrix has non-finite entries".into(),
            ));
        }
        Ok(Self(x))
    }

    pub fn zeros(r: usize, m: usize) -> Self {
        Self(DMatrix::zeros(r, m))
    }

    pub(crate) fn from_matrix_unchecked(x: DMatrix<f64>) -> Self {
        Self(x)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// Column `x_i`.
    pub fn column(&self, i: usize) -> DVectorView<'_, f64> {
        self.0.column(i)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.norm()).collect()
    }

    /// Number of columns with at least one nonzero entry.
    pub fn nonzero_columns(&self) -> usize {
        self.0
            .column_iter()
            .filter(|c| c.iter().any(|v| *v != 0.0))
            .count()
    }
}

/// Bookkeeping from one evaluation of [`prox_g`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProxDiagnostics {
    /// Number of columns kept (the active prefix of the sorted order).
    pub k: usize,
    /// Column indices sorted by decreasing norm, ties by ascending index.
    pub permutation: Vec<usize>,
    /// The common shrinkage `t/(tk+1) · Σ_{j≤k} ‖v_(j)‖`.
    pub threshold: f64,
}

/// `Ω(X) = Σ_i ‖x_i‖`.
pub fn omega(x: &EstimatorMatrix) -> f64 {
    x.column_norms().iter().sum()
}

/// `Ω*(Z) = max_i ‖z_i‖`.
pub fn omega_dual(z: &EstimatorMatrix) -> f64 {
    z.column_norms().into_iter().fold(0.0, f64::max)
}

/// `g(X) = ½ Ω(X)²`.
pub fn g_penalty(x: &EstimatorMatrix) -> f64 {
    let o = omega(x);
    0.5 * o * o
}

/// `g*(Z) = ½ max_i ‖z_i‖²`.
pub fn g_conjugate(z: &EstimatorMatrix) -> f64 {
    let o = omega_dual(z);
    0.5 * o * o
}

/// Whether `Z ∈ ∂g(X)` up to an absolute tolerance.
///
/// On a nonzero column `z_i` must equal `Ω(X) x_i/‖x_i‖`; on a zero column
/// it only has to lie in the ball of radius `Ω(X)`.
pub fn in_subgradient(x: &EstimatorMatrix, z: &EstimatorMatrix, tol: f64) -> bool {
    if x.shape() != z.shape() {
        return false;
    }
    let om = omega(x);
    x.matrix()
        .column_iter()
        .zip(z.matrix().column_iter())
        .all(|(xi, zi)| {
            let nx = xi.norm();
            if nx > 0.0 {
                (zi - xi * (om / nx)).norm() <= tol
            } else {
                zi.norm() <= om + tol
            }
        })
}

/// `prox_{t g}(V) = argmin_X t·g(X) + ½‖X − V‖_F²`.
pub fn prox_g(v: &EstimatorMatrix, t: f64) -> Result<(EstimatorMatrix, ProxDiagnostics)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "prox parameter must be positive, got {t}"
        )));
    }
    let norms = v.column_norms();
    let m = norms.len();
    let mut permutation: Vec<usize> = (0..m).collect();
    // stable: equal norms keep ascending index order
    permutation.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    // The predicate ‖v_(j)‖ ≥ t/(tj+1) S_j is monotone in j, so the largest
    // satisfying j is also the end of the first run; scan it all anyway.
    let mut k = 1;
    let mut prefix = 0.0;
    let mut kept_sum = 0.0;
    for (j, &idx) in permutation.iter().enumerate() {
        prefix += norms[idx];
        let count = (j + 1) as f64;
        if norms[idx] >= t / (t * count + 1.0) * prefix {
            k = j + 1;
            kept_sum = prefix;
        }
    }
    let threshold = t / (t * k as f64 + 1.0) * kept_sum;

    let mut out = DMatrix::zeros(v.nrows(), m);
    for &idx in &permutation[..k] {
        let nv = norms[idx];
        if nv > 0.0 {
            let scale = (1.0 - threshold / nv).max(0.0);
            out.set_column(idx, &(v.column(idx) * scale));
        }
    }
    Ok((
        EstimatorMatrix(out),
        ProxDiagnostics {
            k,
            permutation,
            threshold,
        },
    ))
}
