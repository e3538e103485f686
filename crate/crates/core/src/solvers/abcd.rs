//! Alternating block coordinate descent on the columns of `X`.
//!
//! Each block problem `min_x ‖(x a_iᵀ + R)Σ^{1/2}‖² + σ_N²(‖x‖ + β)²` has a
//! closed-form solution, so a pass over all `m` columns costs `O(nrm)` once
//! `G = (XA − Kᵀ)Σ` is kept up to date column by column.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    expect_algorithm, initial_estimator, Algorithm, EstimatorMonitor, Observer, SolveResult,
    SolverConfig, SolverEvent, Start,
};
use crate::error::{Error, Result};
use crate::model::{residual, DesignProblem};
use crate::penalty::EstimatorMatrix;

/// Passes between full recomputations of the running product `G`.
const REFRESH_EVERY: u64 = 16;

/// Everything block `i` needs from the other columns.
#[derive(Debug, Clone)]
pub struct BlockContext {
    /// `R = Σ_{j≠i} x_j a_jᵀ − Kᵀ` (r×n).
    pub r: DMatrix<f64>,
    /// `β = Σ_{j≠i} ‖x_j‖`.
    pub beta: f64,
}

impl BlockContext {
    /// Context for block `i` of `x`.
    pub fn from_estimator(problem: &DesignProblem, x: &EstimatorMatrix, i: usize) -> Self {
        let xi = x.column(i);
        let r = residual(problem, x) - xi * problem.a().row(i);
        let beta: f64 = x
            .column_norms()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, n)| n)
            .sum();
        Self { r, beta }
    }
}

/// Closed-form minimizer given `b = RΣa_i` and `c = a_iᵀΣa_i`.
fn block_solution(b: &DVector<f64>, beta: f64, c: f64, sigma2n: f64) -> DVector<f64> {
    let nb = b.norm();
    if nb == 0.0 {
        return DVector::zeros(b.len());
    }
    let shrink = (1.0 - sigma2n * beta / nb).max(0.0);
    b * (-shrink / (c + sigma2n))
}

/// Exact minimizer of block `i` with the other columns held fixed.
pub fn block_minimize(
    problem: &DesignProblem,
    i: usize,
    ctx: &BlockContext,
) -> Result<DVector<f64>> {
    if i >= problem.m() {
        return Err(Error::InvalidArgument(format!("block {i} out of range")));
    }
    if ctx.r.shape() != (problem.r(), problem.n()) || !(ctx.beta >= 0.0) {
        return Err(Error::InvalidArgument("inconsistent block context".into()));
    }
    let sa = problem.a_sigma().row(i).transpose();
    let b = &ctx.r * sa;
    Ok(block_solution(
        &b,
        ctx.beta,
        problem.a_sigma_a()[i],
        problem.sigma2n(),
    ))
}

pub fn solve_abcd(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    expect_algorithm(config, &[Algorithm::AbcdCyclic, Algorithm::AbcdRandPerm])?;
    config.validate()?;
    run(problem, config, Start::Default, &mut |_| {})
}

pub(crate) fn run(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let m = problem.m();
    let sigma2n = problem.sigma2n();
    let mut x = initial_estimator(problem, start)?;
    let mut g = residual(problem, &x) * problem.sigma();
    let mut norms = x.column_norms();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..m).collect();

    let mut monitor = EstimatorMonitor::new(config);
    let mut iterations = 0;
    let mut converged = false;
    for pass in 1..=config.max_iter {
        if config.algorithm == Algorithm::AbcdRandPerm {
            order.sort_unstable();
            order.shuffle(&mut rng);
        }
        let mut total: f64 = norms.iter().sum();
        for &i in &order {
            let a_i = problem.a().row(i).transpose();
            let c = problem.a_sigma_a()[i];
            let old = x.column(i).clone_owned();
            // RΣa_i with column i removed from the running product
            let b = &g * &a_i - &old * c;
            let beta = (total - norms[i]).max(0.0);
            let new = block_solution(&b, beta, c, sigma2n);
            let delta = &new - &old;
            if delta.iter().any(|v| *v != 0.0) {
                g += &delta * problem.a_sigma().row(i);
                let n_new = new.norm();
                total += n_new - norms[i];
                norms[i] = n_new;
                x.matrix_mut().set_column(i, &new);
            }
            observer(&SolverEvent::Block {
                pass,
                index: i,
                x: &x,
            });
        }
        if pass % REFRESH_EVERY == 0 {
            g = residual(problem, &x) * problem.sigma();
            norms = x.column_norms();
        }
        iterations = pass;
        observer(&SolverEvent::Iterate {
            iter: pass,
            x: &x,
            step_l: 0.0,
        });
        if monitor.observe(problem, pass, &x, 0.0)? {
            converged = true;
            break;
        }
    }
    monitor.finish(problem, config.algorithm, x, iterations, converged)
}
