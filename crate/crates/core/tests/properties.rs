//! Property-based checks of the invariants of each module.

mod common;

use aopt::metrics::{certificate, design_from_estimator};
use aopt::model::{grad_phi, info_matrix, phi_ak, Design, DesignProblem};
use aopt::oracle::prox_oracle;
use aopt::penalty::{g_penalty, in_subgradient, prox_g, EstimatorMatrix};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn matrix_strategy(max_r: usize, max_m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_r, 1..=max_m).prop_flat_map(|(r, m)| {
        proptest::collection::vec(prop_oneof![3 => -3.0..3.0f64, 1 => Just(0.0)], r * m)
            .prop_map(move |v| DMatrix::from_vec(r, m, v))
    })
}

fn t_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.1), Just(1.0), Just(10.0), 0.01..20.0f64]
}

fn prox(v: &DMatrix<f64>, t: f64) -> EstimatorMatrix {
    prox_g(&EstimatorMatrix::new(v.clone()).unwrap(), t)
        .unwrap()
        .0
}

fn prox_objective(v: &DMatrix<f64>, x: &DMatrix<f64>, t: f64) -> f64 {
    t * g_penalty(&EstimatorMatrix::new(x.clone()).unwrap()) + 0.5 * (x - v).norm_squared()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prox_satisfies_optimality(v in matrix_strategy(5, 8), t in t_strategy()) {
        let x = prox(&v, t);
        let z = EstimatorMatrix::new((&v - x.matrix()) / t).unwrap();
        prop_assert!(in_subgradient(&x, &z, 1e-9));
    }

    #[test]
    fn prox_is_nonexpansive(v1 in matrix_strategy(3, 6), seed in any::<u64>(), t in t_strategy()) {
        let mut rng = rng(seed);
        let v2 = &v1 + normal_matrix(&mut rng, v1.nrows(), v1.ncols());
        let d = (prox(&v1, t).matrix() - prox(&v2, t).matrix()).norm();
        prop_assert!(d <= (&v1 - &v2).norm() + 1e-12);
    }

    #[test]
    fn prox_thresholds_columns(v in matrix_strategy(4, 8), t in t_strategy()) {
        let (x, diag) = prox_g(&EstimatorMatrix::new(v.clone()).unwrap(), t).unwrap();
        for i in 0..v.ncols() {
            if v.column(i).norm() == 0.0 {
                prop_assert_eq!(x.column(i).norm(), 0.0);
            }
        }
        if v.norm() > 0.0 {
            prop_assert_eq!(v.ncols() - x.nonzero_columns(), v.ncols() - diag.k);
        }
    }

    #[test]
    fn prox_beats_perturbations(v in matrix_strategy(3, 6), seed in any::<u64>(), t in t_strategy()) {
        let x = prox(&v, t);
        let base = prox_objective(&v, x.matrix(), t);
        let mut rng = rng(seed);
        for _ in 0..100 {
            let mut delta = normal_matrix(&mut rng, v.nrows(), v.ncols());
            let n = delta.norm();
            delta *= 0.1 * rand::Rng::random_range(&mut rng, 0.0..1.0) / n;
            prop_assert!(prox_objective(&v, &(x.matrix() + delta), t) >= base - 1e-12);
        }
    }

    #[test]
    fn prox_matches_oracle(v in matrix_strategy(4, 6), t in t_strategy()) {
        let x = prox(&v, t);
        let o = prox_oracle(&EstimatorMatrix::new(v.clone()).unwrap(), t);
        prop_assert!((x.matrix() - o.matrix()).norm() <= 1e-6);
    }

    #[test]
    fn prox_is_permutation_equivariant(v in matrix_strategy(3, 7), seed in any::<u64>(), t in t_strategy()) {
        let m = v.ncols();
        let mut perm: Vec<usize> = (0..m).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng(seed));
        let permuted = DMatrix::from_fn(v.nrows(), m, |i, j| v[(i, perm[j])]);
        let x = prox(&v, t);
        let xp = prox(&permuted, t);
        for j in 0..m {
            prop_assert!((xp.column(j) - x.column(perm[j])).norm() <= 1e-12);
        }
    }

    #[test]
    fn recovery_is_scale_invariant(v in matrix_strategy(3, 6), c in 1e-3..1e3f64) {
        let x = EstimatorMatrix::new(v.clone()).unwrap();
        let y = EstimatorMatrix::new(v * c).unwrap();
        let (a, b) = (design_from_estimator(&x), design_from_estimator(&y));
        prop_assert_eq!(a.degenerate, b.degenerate);
        for (p, q) in a.design.as_slice().iter().zip(b.design.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_convex_on_segments(seed in any::<u64>(), m in 2usize..10, n in 1usize..5, r in 1usize..4, lambda in 0.01..0.99f64) {
        let mut rng = rng(seed);
        let p = general_problem(&mut rng, m, n, r);
        let w1 = interior_design(&mut rng, m);
        let w2 = Design::vertex(m, seed as usize % m);
        let mid = Design::new(w1.weights() * lambda + w2.weights() * (1.0 - lambda)).unwrap();
        let lhs = phi_ak(&p, &mid).unwrap();
        let rhs = lambda * phi_ak(&p, &w1).unwrap() + (1.0 - lambda) * phi_ak(&p, &w2).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn phi_matches_dense_formula(seed in any::<u64>(), m in 1usize..10, n in 1usize..5, r in 1usize..4) {
        let mut rng = rng(seed);
        let p = general_problem(&mut rng, m, n, r);
        let w = interior_design(&mut rng, m);
        let a = phi_ak(&p, &w).unwrap();
        let b = phi_dense(&p, w.as_slice());
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0));
    }

    #[test]
    fn target_scaling_is_quadratic(seed in any::<u64>(), m in 1usize..8, n in 1usize..4, c in 0.1..10.0f64) {
        let mut rng = rng(seed);
        let p = general_problem(&mut rng, m, n, 2);
        let q = DesignProblem::new(p.a().clone(), p.k() * c, p.sigma().clone(), p.sigma2n()).unwrap();
        let w = interior_design(&mut rng, m);
        let (a, b) = (phi_ak(&p, &w).unwrap(), phi_ak(&q, &w).unwrap());
        prop_assert!((b - c * c * a).abs() <= 1e-10 * b.max(1.0));
    }

    #[test]
    fn sensitivities_are_nonnegative_and_info_is_spd(seed in any::<u64>(), m in 1usize..10, n in 1usize..5) {
        let mut rng = rng(seed);
        let p = general_problem(&mut rng, m, n, 2);
        let w = if seed % 2 == 0 { interior_design(&mut rng, m) } else { Design::vertex(m, 0) };
        prop_assert!(grad_phi(&p, &w).unwrap().iter().all(|d| *d >= 0.0));
        let info = info_matrix(&p, &w).unwrap();
        prop_assert!(info.matrix().clone().cholesky().is_some());
    }

    #[test]
    fn certificate_is_sound_and_reproducible(seed in any::<u64>(), m in 2usize..10, n in 1usize..4) {
        let mut rng = rng(seed);
        let p = general_problem(&mut rng, m, n, n);
        let w = interior_design(&mut rng, m);
        let c1 = certificate(&p, &w).unwrap();
        let c2 = certificate(&p, &w).unwrap();
        prop_assert_eq!(c1.eps.to_bits(), c2.eps.to_bits());
        let rho = aopt::oracle::reference_rho(&p, 1e-10).unwrap().rho;
        prop_assert!(c1.rho_lower_bound() <= rho + 1e-9 * rho.max(1.0));
        prop_assert!(rho <= c1.phi * (1.0 + 1e-12));
    }
}

#[test]
fn zero_input_gives_zero_output() {
    let v = DMatrix::zeros(3, 4);
    assert_eq!(prox(&v, 1.0).matrix(), &v);
    let w = DVector::from_element(4, 0.25);
    assert_eq!(Design::new(w).unwrap(), Design::uniform(4));
}
