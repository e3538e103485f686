//! Bayes `A_K`-optimal experimental design.
//!
//! Given candidate regressors `a_1..a_m` (the rows of `A`), a prior
//! covariance `Σ`, a noise level `σ_N²` and a target matrix `K`, the crate
//! computes approximate designs `w` on the probability simplex minimizing
//!
//! ```text
//! Φ(w) = trace Kᵀ (Σ⁻¹ + σ_N⁻² Σ_i w_i a_i a_iᵀ)⁻¹ K.
//! ```
//!
//! Besides the classical simplex methods (vertex direction, multiplicative
//! updates), the problem is solved through an equivalent unconstrained
//! problem over estimator matrices `X` (r×m) penalized by a squared group
//! lasso, `F(X) = ‖(XA − Kᵀ)Σ^{1/2}‖² + σ_N² (Σ_i ‖x_i‖)²`, whose minimizer
//! has column norms proportional to an optimal design.
//!
//! ```
//! use aopt::instances::gen_random;
//! use aopt::solvers::{solve, Algorithm, SolverConfig};
//!
//! let problem = gen_random(40, 4, 1).unwrap();
//! let result = solve(&problem, &SolverConfig::new(Algorithm::Fista).with_tol(1e-6)).unwrap();
//! assert!(result.converged);
//! assert!(result.certificate.eps <= 1e-6);
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod instances;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod penalty;
pub mod solvers;

pub use error::{Error, Result};
pub use metrics::{certificate, design_from_estimator, efficiency, DualityCertificate};
pub use model::{phi_ak, Design, DesignProblem};
pub use penalty::{prox_g, EstimatorMatrix};
pub use solvers::{solve, Algorithm, SolveResult, SolverConfig, StopRule, VdmStep};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/penalty.md")]
    mod penalty {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
