//! Slow, independent reference computations used to check the solvers.
//!
//! Nothing here calls into the penalty or solver modules. The optimal value
//! is computed with a separate multiplicative-update loop built on dense
//! inverses, the proximity operator is computed by accelerated projected
//! gradient on a smooth simplex-constrained reparametrization, and gradients
//! are checked with central differences.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Design, DesignProblem};
use crate::penalty::EstimatorMatrix;

/// Iteration cap of [`reference_rho`].
pub const REFERENCE_MAX_ITER: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// `Φ(w*)`, an upper bound on the optimal value.
    pub rho: f64,
    /// `Φ(w*)(1 − ε)`, a certified lower bound.
    pub rho_lower: f64,
    pub eps: f64,
    pub w_star: Design,
    /// Best linear estimator for `w*`; a near-minimizer of the reformulated
    /// objective with `F(X*) ≤ Φ(w*)`.
    pub x_star: EstimatorMatrix,
    pub iterations: u64,
}

struct DenseEval {
    phi: f64,
    d: DVector<f64>,
    m_inv: DMatrix<f64>,
}

fn dense_eval(problem: &DesignProblem, w: &DVector<f64>) -> Result<DenseEval> {
    let sigma_inv = problem
        .sigma()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("prior covariance is singular".into()))?;
    let a = problem.a();
    let mut info = sigma_inv;
    for i in 0..problem.m() {
        if w[i] != 0.0 {
            let ai = a.row(i).transpose();
            info += &ai * ai.transpose() * (w[i] / problem.sigma2n());
        }
    }
    let m_inv = info
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("information matrix is singular".into()))?;
    let kt_minv = problem.k().transpose() * &m_inv;
    let phi = (&kt_minv * problem.k()).trace();
    let proj = kt_minv * a.transpose();
    let d = DVector::from_iterator(
        problem.m(),
        proj.column_iter()
            .map(|c| c.norm_squared() / problem.sigma2n()),
    );
    Ok(DenseEval { phi, d, m_inv })
}

/// Optimal value by multiplicative updates run to `ε ≤ tol`.
pub fn reference_rho(problem: &DesignProblem, tol: f64) -> Result<ReferenceSolution> {
    let m = problem.m();
    let mut w = DVector::from_element(m, 1.0 / m as f64);
    let mut iterations = 0;
    loop {
        let ev = dense_eval(problem, &w)?;
        let wd = w.dot(&ev.d);
        let gap = (ev.d.max() - wd).max(0.0);
        let eps = if ev.phi + gap > 0.0 {
            gap / (ev.phi + gap)
        } else {
            0.0
        };
        if eps <= tol || !(wd > 0.0) {
            let x_star = blue_estimator(problem, &w, &ev.m_inv);
            return Ok(ReferenceSolution {
                rho: ev.phi,
                rho_lower: ev.phi * (1.0 - eps),
                eps,
                w_star: Design::new(w)?,
                x_star,
                iterations,
            });
        }
        if iterations >= REFERENCE_MAX_ITER {
            return Err(Error::NonConvergence { iterations, eps });
        }
        w = w.component_mul(&ev.d) / wd;
        let total = w.sum();
        w /= total;
        iterations += 1;
    }
}

/// `X(w) = σ_N⁻² Kᵀ M(w)⁻¹ Aᵀ Diag(w)`.
fn blue_estimator(
    problem: &DesignProblem,
    w: &DVector<f64>,
    m_inv: &DMatrix<f64>,
) -> EstimatorMatrix {
    let mut x = problem.k().transpose() * m_inv * problem.a().transpose() / problem.sigma2n();
    for (mut col, wi) in x.column_iter_mut().zip(w.iter()) {
        col *= *wi;
    }
    EstimatorMatrix::from_matrix_unchecked(x)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cum += u;
        let cand = (cum - 1.0) / (j + 1) as f64;
        if u - cand > 0.0 {
            theta = cand;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// `prox_{t g}(V)` computed without the sorting formula.
///
/// Uses `½Ω(X)² = min_{w∈Δ} ½ Σ ‖x_i‖²/w_i`: for fixed `w` the optimal columns
/// are `x_i = v_i w_i/(w_i + t)`, and `w` minimizes the smooth convex
/// `½ Σ ‖v_i‖² t/(w_i + t)` over the simplex, solved by accelerated projected
/// gradient with adaptive restart until the gradient mapping is below 1e-10
/// (relative to the problem scale).
pub fn prox_oracle(v: &EstimatorMatrix, t: f64) -> EstimatorMatrix {
    let m = v.ncols();
    let sq = DVector::from_iterator(m, v.matrix().column_iter().map(|c| c.norm_squared()));
    let top = sq.max();
    if top == 0.0 {
        return EstimatorMatrix::zeros(v.nrows(), m);
    }
    let grad = |w: &DVector<f64>| DVector::from_fn(m, |i, _| -0.5 * sq[i] * t / (w[i] + t).powi(2));
    let value = |w: &DVector<f64>| 0.5 * (0..m).map(|i| sq[i] * t / (w[i] + t)).sum::<f64>();
    let lip = top / (t * t);
    let tol = 1e-10 * (top / t).max(1.0);

    let mut w = DVector::from_element(m, 1.0 / m as f64);
    let mut y = w.clone();
    let mut momentum: f64 = 1.0;
    for _ in 0..5_000_000 {
        let next = project_simplex(&(&y - grad(&y) / lip));
        let mapping = (&y - &next).norm() * lip;
        if mapping <= tol && (&w - &next).norm() * lip <= tol {
            w = next;
            break;
        }
        if value(&next) > value(&w) {
            // restart with a plain projected gradient step, which always descends
            momentum = 1.0;
            w = project_simplex(&(&w - grad(&w) / lip));
            y = w.clone();
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        y = &next + (&next - &w) * ((momentum - 1.0) / m_next);
        w = next;
        momentum = m_next;
    }

    let mut x = v.matrix().clone();
    for (mut col, wi) in x.column_iter_mut().zip(w.iter()) {
        col *= wi / (wi + t);
    }
    EstimatorMatrix::from_matrix_unchecked(x)
}

/// Central differences `(f(p + h e_j) − f(p − h e_j)) / 2h`.
pub fn fd_gradient<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut p = point.to_vec();
    (0..point.len())
        .map(|j| {
            let orig = p[j];
            p[j] = orig + h;
            let up = f(&p);
            p[j] = orig - h;
            let down = f(&p);
            p[j] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
