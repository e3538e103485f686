use crate::error::{Error, Result};
use crate::model::{grad_f, DesignProblem};
use crate::penalty::{prox_g, EstimatorMatrix};

/// Line-search trials allowed before giving up.
pub const MAX_BACKTRACKS: u32 = 100;

/// `‖D A Σ^{1/2}‖_F²`, the exact second-order term of the quadratic `f`.
pub(crate) fn curvature_term(problem: &DesignProblem, d: &EstimatorMatrix) -> f64 {
    let da = d.matrix() * problem.a();
    let das = d.matrix() * problem.a_sigma();
    das.component_mul(&da).sum().max(0.0)
}

/// Proximal gradient step from `x_base` with step `1/l`.
pub(crate) fn prox_step(
    problem: &DesignProblem,
    x_base: &EstimatorMatrix,
    grad: &nalgebra::DMatrix<f64>,
    l: f64,
) -> Result<EstimatorMatrix> {
    let v = EstimatorMatrix::from_matrix_unchecked(x_base.matrix() - grad / l);
    Ok(prox_g(&v, 2.0 * problem.sigma2n() / l)?.0)
}

/// One backtracking forward-backward step from `x_base`.
///
/// Tries `L̄ = ηⁱ L_prev` for `i = 0, 1, …` and returns the first
/// `P = prox_{2σ_N² g/L̄}(X − ∇f(X)/L̄)` satisfying
/// `F(P) ≤ f(X) + ⟨∇f(X), P − X⟩ + 2σ_N² g(P) + (L̄/2)‖P − X‖²`.
///
/// `f` is quadratic, so the test is evaluated in the equivalent form
/// `‖(P − X) A Σ^{1/2}‖² ≤ (L̄/2)‖P − X‖²`, which has no cancellation.
pub fn backtrack_step(
    problem: &DesignProblem,
    x_base: &EstimatorMatrix,
    l_prev: f64,
    eta: f64,
) -> Result<(EstimatorMatrix, f64)> {
    if !(l_prev > 0.0) || !(eta > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "backtracking needs L > 0 and eta > 1 (got L={l_prev}, eta={eta})"
        )));
    }
    let grad = grad_f(problem, x_base)?;
    let mut l = l_prev;
    for _ in 0..=MAX_BACKTRACKS {
        let p = prox_step(problem, x_base, &grad, l)?;
        let d = EstimatorMatrix::from_matrix_unchecked(p.matrix() - x_base.matrix());
        if curvature_term(problem, &d) <= 0.5 * l * d.matrix().norm_squared() {
            return Ok((p, l));
        }
        l *= eta;
    }
    Err(Error::NumericalFailure(format!(
        "descent condition still fails after {MAX_BACKTRACKS} backtracking steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_random;
    use crate::model::{composite_objective, f_smooth, lipschitz_L, smoothness_constant};
    use crate::penalty::g_penalty;
    use nalgebra::DMatrix;

    #[test]
    fn accepts_immediately_above_smoothness() {
        let p = gen_random(10, 3, 1).unwrap();
        let x = EstimatorMatrix::new(DMatrix::from_fn(3, 10, |i, j| ((i + j) % 3) as f64 * 0.1))
            .unwrap();
        let l = smoothness_constant(&p).max(lipschitz_L(&p));
        let (_, l_new) = backtrack_step(&p, &x, l, 2.0).unwrap();
        assert_eq!(l_new, l);
    }

    #[test]
    fn descent_inequality_holds_in_original_form() {
        let p = gen_random(12, 4, 5).unwrap();
        let x = EstimatorMatrix::new(DMatrix::from_fn(4, 12, |i, j| {
            ((i * 3 + j) % 5) as f64 * 0.05
        }))
        .unwrap();
        let (pt, l) = backtrack_step(&p, &x, 1.0, 2.0).unwrap();
        let g = crate::model::grad_f(&p, &x).unwrap();
        let d = pt.matrix() - x.matrix();
        let rhs = f_smooth(&p, &x).unwrap()
            + g.dot(&d)
            + 2.0 * p.sigma2n() * g_penalty(&pt)
            + 0.5 * l * d.norm_squared();
        let lhs = composite_objective(&p, &pt).unwrap();
        assert!(lhs <= rhs + 1e-10 * rhs.abs(), "{lhs} > {rhs}");
        assert!(l <= 1.0f64.max(2.0 * lipschitz_L(&p)));
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = gen_random(3, 2, 1).unwrap();
        let x = EstimatorMatrix::zeros(2, 3);
        assert!(backtrack_step(&p, &x, 0.0, 2.0).is_err());
        assert!(backtrack_step(&p, &x, 1.0, 1.0).is_err());
    }
}
