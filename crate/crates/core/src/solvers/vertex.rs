//! Vertex direction (Fedorov–Wynn) method with a backtracking step size.

use super::{
    expect_algorithm, initial_design, Algorithm, Observer, Recorder, SolveResult, SolverConfig,
    SolverEvent, Start, VdmStep, MAX_BACKTRACKS,
};
use crate::error::{Error, Result};
use crate::metrics::certificate_from;
use crate::model::{phi_ak, phi_and_grad, Design, DesignProblem};

pub fn solve_vdm(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    expect_algorithm(config, &[Algorithm::Vdm])?;
    config.validate()?;
    run(problem, config, Start::Default, &mut |_| {})
}

fn argmax_first(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in d.iter().enumerate() {
        if *v > d[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn run(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let mut design = initial_design(problem, start)?;
    let (mut phi, mut d) = phi_and_grad(problem, &design)?;
    let mut l = match config.vdm_step {
        // the step 1/L must stay in (0, 1] to keep w on the simplex
        VdmStep::Reciprocal => config.l0.max(1.0),
        VdmStep::QuadraticModel => config.l0,
    };
    let mut recorder = Recorder::new(config);
    let mut iterations = 0;
    let mut converged = false;
    let mut cert = certificate_from(phi, d.clone(), &design);
    recorder.certified(&cert);

    for iter in 1..=config.max_iter {
        // an already certified design is kept as is
        if cert.eps > config.tol {
            let target = argmax_first(d.as_slice());
            let w = design.weights();
            let gap = (d[target] - w.dot(&d)).max(0.0);
            let mut dir = -w.clone();
            dir[target] += 1.0;
            let dir_norm2 = dir.norm_squared();
            let mut accepted = None;
            let mut trial_l = l;
            for _ in 0..=MAX_BACKTRACKS {
                let alpha = match config.vdm_step {
                    VdmStep::Reciprocal => 1.0 / trial_l,
                    VdmStep::QuadraticModel if dir_norm2 > 0.0 => {
                        (gap / (trial_l * dir_norm2)).min(1.0)
                    }
                    VdmStep::QuadraticModel => 0.0,
                };
                let mut next = w * (1.0 - alpha);
                next[target] += alpha;
                let step = &next - w;
                let next = Design::from_simplex(next);
                let phi_next = phi_ak(problem, &next)?;
                let bound = phi - d.dot(&step) + 0.5 * trial_l * step.norm_squared();
                if phi_next <= bound {
                    accepted = Some(next);
                    break;
                }
                trial_l *= config.eta;
            }
            let next = accepted.ok_or_else(|| {
                Error::NumericalFailure(format!(
                    "vertex step not accepted after {MAX_BACKTRACKS} backtracking steps"
                ))
            })?;
            l = trial_l;
            let total = next.weights().sum();
            design = Design::from_simplex(next.into_inner() / total);
            (phi, d) = phi_and_grad(problem, &design)?;
            cert = certificate_from(phi, d.clone(), &design);
            recorder.certified(&cert);
        }
        iterations = iter;
        observer(&SolverEvent::Design {
            iter,
            design: &design,
            step_l: l,
        });
        let support = design.weights().iter().filter(|v| **v > 0.0).count();
        recorder.push(iter, &cert, support, &design, l);
        if cert.eps <= config.tol {
            converged = true;
            break;
        }
    }
    Ok(recorder.finish(
        Algorithm::Vdm,
        design,
        cert,
        None,
        false,
        iterations,
        converged,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn ties_pick_smallest_index() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax_first(&[4.0 / 9.0, 4.0 / 9.0]), 0);
    }

    #[test]
    fn optimal_start_stops_at_once() {
        let p = DesignProblem::with_identity_prior(DMatrix::identity(2, 2), 1.0).unwrap();
        let res = solve_vdm(&p, &SolverConfig::new(Algorithm::Vdm)).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        assert_eq!(res.design, Design::uniform(2));
        assert_eq!(res.trace.len(), 1);
    }

    #[test]
    fn iterates_stay_feasible() {
        let p = crate::instances::gen_random(15, 3, 2).unwrap();
        let cfg = SolverConfig::new(Algorithm::Vdm)
            .with_max_iter(200)
            .with_tol(0.0);
        let mut worst: f64 = 0.0;
        super::super::solve_with(&p, &cfg, Start::Default, &mut |ev| {
            if let SolverEvent::Design { design, .. } = ev {
                assert!(design.weights().iter().all(|v| *v >= 0.0));
                worst = worst.max((design.weights().sum() - 1.0).abs());
            }
        })
        .unwrap();
        assert!(worst <= 1e-12);
    }
}
