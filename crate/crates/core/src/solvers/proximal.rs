//! Forward-backward splitting and its accelerated variant.

use super::backtrack::{backtrack_step, prox_step};
use super::{
    expect_algorithm, initial_estimator, Algorithm, EstimatorMonitor, Observer, SolveResult,
    SolverConfig, SolverEvent, Start, StepRule,
};
use crate::error::{Error, Result};
use crate::model::{grad_f, lipschitz_L, smoothness_constant, DesignProblem};
use crate::penalty::EstimatorMatrix;

/// `t_{k+1} = (1 + √(1 + 4t_k²)) / 2`.
pub fn next_momentum(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// State carried between accelerated iterations.
#[derive(Debug, Clone)]
pub struct FistaState {
    pub t: f64,
    /// Extrapolated point `Y_k`.
    pub y: EstimatorMatrix,
    pub x_prev: EstimatorMatrix,
}

impl FistaState {
    pub fn new(x0: EstimatorMatrix) -> Self {
        Self {
            t: 1.0,
            y: x0.clone(),
            x_prev: x0,
        }
    }

    /// Accepts `X_k` and forms `Y_{k+1} = X_k + ((t_k − 1)/t_{k+1})(X_k − X_{k−1})`.
    pub fn advance(&mut self, x: &EstimatorMatrix) {
        let t_next = next_momentum(self.t);
        let beta = (self.t - 1.0) / t_next;
        let y = x.matrix() + (x.matrix() - self.x_prev.matrix()) * beta;
        self.y = EstimatorMatrix::from_matrix_unchecked(y);
        self.x_prev = x.clone();
        self.t = t_next;
    }
}

enum Stepper {
    Backtracking { l: f64, eta: f64 },
    Fixed { l: f64 },
}

impl Stepper {
    fn new(problem: &DesignProblem, config: &SolverConfig) -> Result<Self> {
        match config.step_rule {
            StepRule::Backtracking => Ok(Stepper::Backtracking {
                l: config.l0,
                eta: config.eta,
            }),
            StepRule::Fixed => {
                let l = lipschitz_L(problem).max(smoothness_constant(problem));
                if l > 0.0 {
                    Ok(Stepper::Fixed { l })
                } else {
                    Err(Error::InvalidArgument(
                        "fixed step needs a nonzero A".into(),
                    ))
                }
            }
        }
    }

    fn step(&mut self, problem: &DesignProblem, base: &EstimatorMatrix) -> Result<EstimatorMatrix> {
        match self {
            Stepper::Backtracking { l, eta } => {
                let (p, l_new) = backtrack_step(problem, base, *l, *eta)?;
                *l = l_new;
                Ok(p)
            }
            Stepper::Fixed { l } => prox_step(problem, base, &grad_f(problem, base)?, *l),
        }
    }

    fn constant(&self) -> f64 {
        match self {
            Stepper::Backtracking { l, .. } | Stepper::Fixed { l } => *l,
        }
    }
}

pub fn solve_fb(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    expect_algorithm(config, &[Algorithm::Fb])?;
    config.validate()?;
    run_fb(problem, config, Start::Default, &mut |_| {})
}

pub fn solve_fista(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    expect_algorithm(config, &[Algorithm::Fista])?;
    config.validate()?;
    run_fista(problem, config, Start::Default, &mut |_| {})
}

pub(crate) fn run_fb(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let mut x = initial_estimator(problem, start)?;
    let mut stepper = Stepper::new(problem, config)?;
    let mut monitor = EstimatorMonitor::new(config);
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=config.max_iter {
        x = stepper.step(problem, &x)?;
        iterations = iter;
        observer(&SolverEvent::Iterate {
            iter,
            x: &x,
            step_l: stepper.constant(),
        });
        if monitor.observe(problem, iter, &x, stepper.constant())? {
            converged = true;
            break;
        }
    }
    monitor.finish(problem, Algorithm::Fb, x, iterations, converged)
}

pub(crate) fn run_fista(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let x0 = initial_estimator(problem, start)?;
    let mut state = FistaState::new(x0.clone());
    let mut x = x0;
    let mut stepper = Stepper::new(problem, config)?;
    let mut monitor = EstimatorMonitor::new(config);
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=config.max_iter {
        x = stepper.step(problem, &state.y)?;
        state.advance(&x);
        iterations = iter;
        observer(&SolverEvent::Iterate {
            iter,
            x: &x,
            step_l: stepper.constant(),
        });
        if monitor.observe(problem, iter, &x, stepper.constant())? {
            converged = true;
            break;
        }
    }
    monitor.finish(problem, Algorithm::Fista, x, iterations, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_random;
    use crate::model::composite_objective;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn momentum_sequence() {
        let t2 = next_momentum(1.0);
        assert_relative_eq!(t2, (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        let t3 = next_momentum(t2);
        assert_relative_eq!(
            t3,
            (1.0 + (1.0 + 4.0 * t2 * t2).sqrt()) / 2.0,
            epsilon = 1e-15
        );
        let mut t = 1.0;
        for _ in 0..50 {
            let n = next_momentum(t);
            assert!(n > t);
            t = n;
        }
    }

    #[test]
    fn fista_state_first_step_has_no_momentum() {
        let x0 = EstimatorMatrix::zeros(2, 3);
        let mut st = FistaState::new(x0);
        let x1 = EstimatorMatrix::new(DMatrix::from_element(2, 3, 1.0)).unwrap();
        st.advance(&x1);
        assert_eq!(st.y, x1);
        let x2 = EstimatorMatrix::new(DMatrix::from_element(2, 3, 2.0)).unwrap();
        st.advance(&x2);
        let t2 = next_momentum(1.0);
        let beta = (t2 - 1.0) / next_momentum(t2);
        assert_relative_eq!(st.y.matrix()[(0, 0)], 2.0 + beta, epsilon = 1e-15);
    }

    #[test]
    fn zero_target_stops_at_first_iteration() {
        let mut p = gen_random(5, 2, 3).unwrap();
        p = DesignProblem::new(
            p.a().clone(),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            0.01,
        )
        .unwrap();
        for alg in [Algorithm::Fb, Algorithm::Fista] {
            let res = super::super::solve(&p, &SolverConfig::new(alg)).unwrap();
            assert_eq!(res.iterations, 1);
            assert_eq!(res.trace.len(), 1);
            assert_eq!(res.objective, 0.0);
            assert!(res.converged);
            assert_eq!(res.estimator.unwrap(), EstimatorMatrix::zeros(2, 5));
        }
    }

    #[test]
    fn fixed_step_descends() {
        let p = gen_random(15, 3, 8).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Fb)
            .with_max_iter(50)
            .with_tol(0.0);
        cfg.step_rule = StepRule::Fixed;
        let mut prev = f64::INFINITY;
        super::super::solve_with(&p, &cfg, Start::Default, &mut |ev| {
            if let SolverEvent::Iterate { x, .. } = ev {
                let f = composite_objective(&p, x).unwrap();
                assert!(f <= prev + 1e-12);
                prev = f;
            }
        })
        .unwrap();
    }

    #[test]
    fn wrong_algorithm_rejected() {
        let p = gen_random(4, 2, 1).unwrap();
        assert!(solve_fb(&p, &SolverConfig::new(Algorithm::Fista)).is_err());
        assert!(solve_fista(&p, &SolverConfig::new(Algorithm::Mul)).is_err());
    }
}
