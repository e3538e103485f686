//! Multiplicative weight update `w⁺ = (w ⊙ d) / (wᵀd)`.

use nalgebra::DVector;

use super::{
    expect_algorithm, initial_design, Algorithm, Observer, Recorder, SolveResult, SolverConfig,
    SolverEvent, Start,
};
use crate::error::{Error, Result};
use crate::metrics::certificate_from;
use crate::model::{phi_and_grad, Design, DesignProblem};

/// One multiplicative step, renormalized to sum to one.
///
/// Fails when `wᵀd ≤ 0` while some `d_i > 0`: the update would leave the
/// simplex without having reached a stationary design.
pub fn multiplicative_update(design: &Design, d: &DVector<f64>) -> Result<Design> {
    let w = design.weights();
    let wd = w.dot(d);
    if !(wd > 0.0) {
        if d.iter().all(|v| *v == 0.0) {
            // every design is stationary
            return Ok(design.clone());
        }
        return Err(Error::DegenerateInstance(
            "wᵀd vanishes: no mass on points with positive sensitivity".into(),
        ));
    }
    let next = w.component_mul(d) / wd;
    let total = next.sum();
    Ok(Design::from_simplex(next / total))
}

pub fn solve_mul(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    expect_algorithm(config, &[Algorithm::Mul])?;
    config.validate()?;
    run(problem, config, Start::Default, &mut |_| {})
}

pub(crate) fn run(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let mut design = initial_design(problem, start)?;
    let (phi, d) = phi_and_grad(problem, &design)?;
    let mut cert = certificate_from(phi, d, &design);
    let mut recorder = Recorder::new(config);
    let mut iterations = 0;
    let mut converged = false;

    recorder.certified(&cert);

    for iter in 1..=config.max_iter {
        if cert.eps > config.tol {
            design = multiplicative_update(&design, &cert.d)?;
            let (phi, d) = phi_and_grad(problem, &design)?;
            cert = certificate_from(phi, d, &design);
            recorder.certified(&cert);
        }
        iterations = iter;
        observer(&SolverEvent::Design {
            iter,
            design: &design,
            step_l: 0.0,
        });
        let support = design.weights().iter().filter(|v| **v > 0.0).count();
        recorder.push(iter, &cert, support, &design, 0.0);
        if cert.eps <= config.tol {
            converged = true;
            break;
        }
    }
    Ok(recorder.finish(
        Algorithm::Mul,
        design,
        cert,
        None,
        false,
        iterations,
        converged,
    ))
}
