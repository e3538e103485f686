#![allow(dead_code)]

use aopt::model::{Design, DesignProblem};
use aopt::penalty::EstimatorMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn spd_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = normal_matrix(rng, n, n);
    &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

/// A problem with a general prior, target and noise level.
pub fn general_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> DesignProblem {
    let a = normal_matrix(rng, m, n);
    let k = normal_matrix(rng, n, r);
    let sigma = spd_matrix(rng, n);
    let sigma2n = 10f64.powf(rng.random_range(-2.0..0.0));
    DesignProblem::new(a, k, sigma, sigma2n).unwrap()
}

/// A design with all weights bounded away from zero.
pub fn interior_design(rng: &mut ChaCha8Rng, m: usize) -> Design {
    let w = DVector::from_fn(m, |_, _| rng.random_range(0.2..1.0));
    let total = w.sum();
    Design::new(w / total).unwrap()
}

pub fn random_estimator(rng: &mut ChaCha8Rng, r: usize, m: usize) -> EstimatorMatrix {
    EstimatorMatrix::new(normal_matrix(rng, r, m)).unwrap()
}

/// `Φ` from its definition with an explicit inverse.
pub fn phi_dense(problem: &DesignProblem, w: &[f64]) -> f64 {
    let mut info = problem.sigma().clone().try_inverse().unwrap();
    for (i, wi) in w.iter().enumerate() {
        let a = problem.a().row(i).transpose();
        info += &a * a.transpose() * (*wi / problem.sigma2n());
    }
    let inv = info.try_inverse().unwrap();
    (problem.k().transpose() * inv * problem.k()).trace()
}
