//! Problem instances and design-space quantities.
//!
//! A [`DesignProblem`] holds the regression matrix `A` (one row per candidate
//! design point), the estimation target `K`, the prior covariance `Σ` and the
//! noise level `σ_N²`. Everything else in this module is a pure function of a
//! problem and either a design `w` on the simplex or an estimator matrix `X`.
//!
//! No inverse is ever formed explicitly: `Σ⁻¹` and `M(w)⁻¹` are only applied
//! through Cholesky solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::penalty::{omega, EstimatorMatrix};

/// Relative asymmetry accepted in `Σ` before it is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Accepted deviation of `Σ w_i` from one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// An immutable Bayes `A_K`-optimal design instance.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    a: DMatrix<f64>,
    k: DMatrix<f64>,
    sigma: DMatrix<f64>,
    sigma2n: f64,
    sigma_chol: Cholesky<f64, Dyn>,
    sigma_inv: DMatrix<f64>,
    // row i is (Σ a_i)ᵀ
    a_sigma: DMatrix<f64>,
    // a_iᵀ Σ a_i
    a_sigma_a: DVector<f64>,
}

impl DesignProblem {
    /// Builds a problem from `A` (m×n), `K` (n×r), `Σ` (n×n) and `σ_N²`.
    ///
    /// `Σ` must be symmetric up to [`SYMMETRY_TOL`] relative to its largest
    /// entry; it is symmetrized as `(Σ + Σᵀ)/2` once the check passes.
    pub fn new(
        a: DMatrix<f64>,
        k: DMatrix<f64>,
        sigma: DMatrix<f64>,
        sigma2n: f64,
    ) -> Result<Self> {
        let (m, n) = a.shape();
        let r = k.ncols();
        if m == 0 || n == 0 || r == 0 {
            return Err(Error::InvalidProblem(format!(
                "dimensions must be positive (m={m}, n={n}, r={r})"
            )));
        }
        if k.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "K has {} rows, expected n={n}",
                k.nrows()
            )));
        }
        if sigma.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Sigma is {}x{}, expected {n}x{n}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if !(sigma2n.is_finite() && sigma2n > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "sigma2N must be positive and finite, got {sigma2n}"
            )));
        }
        for (name, mat) in [("A", &a), ("K", &k), ("Sigma", &sigma)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "{name} has non-finite entries"
                )));
            }
        }

        let scale = sigma.amax();
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidProblem(format!(
                "Sigma is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let sigma_chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::InvalidProblem("Sigma is not positive definite".to_string()))?;
        let sigma_inv = sigma_chol.solve(&DMatrix::identity(n, n));
        let sigma_inv = (&sigma_inv + sigma_inv.transpose()) * 0.5;

        let a_sigma = &a * &sigma;
        let a_sigma_a = DVector::from_iterator(m, (0..m).map(|i| a.row(i).dot(&a_sigma.row(i))));

        Ok(Self {
            a,
            k,
            sigma,
            sigma2n,
            sigma_chol,
            sigma_inv,
            a_sigma,
            a_sigma_a,
        })
    }

    /// `K = Σ = I_n`, the setting used for the benchmark families.
    pub fn with_identity_prior(a: DMatrix<f64>, sigma2n: f64) -> Result<Self> {
        let n = a.ncols();
        Self::new(a, DMatrix::identity(n, n), DMatrix::identity(n, n), sigma2n)
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn r(&self) -> usize {
        self.k.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma2n(&self) -> f64 {
        self.sigma2n
    }

    pub fn sigma_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.sigma_chol
    }

    /// `Σ⁻¹`, obtained from the Cholesky factor of `Σ`.
    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    /// `AΣ` (m×n); row `i` is `(Σ a_i)ᵀ`.
    pub fn a_sigma(&self) -> &DMatrix<f64> {
        &self.a_sigma
    }

    /// The quadratic forms `a_iᵀ Σ a_i`.
    pub fn a_sigma_a(&self) -> &DVector<f64> {
        &self.a_sigma_a
    }

    /// True when `K` has no nonzero entry, so every design is optimal.
    pub fn is_trivial(&self) -> bool {
        self.k.iter().all(|&v| v == 0.0)
    }
}

/// A point of the probability simplex over the `m` candidate points.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    w: DVector<f64>,
}

impl Design {
    /// Validates `w` and rescales it once so that it sums to one.
    ///
    /// Entries must be finite and nonnegative and the sum must be within
    /// [`SIMPLEX_TOL`] of one.
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidDesign("empty weight vector".into()));
        }
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDesign(format!(
                "weight {bad} is not in [0, inf)"
            )));
        }
        let total = w.sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDesign(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { w: w / total })
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(w))
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            w: DVector::from_element(m, 1.0 / m as f64),
        }
    }

    /// All mass on point `i`.
    pub fn vertex(m: usize, i: usize) -> Self {
        let mut w = DVector::zeros(m);
        w[i] = 1.0;
        Self { w }
    }

    /// Wraps weights already known to lie on the simplex.
    pub(crate) fn from_simplex(w: DVector<f64>) -> Self {
        debug_assert!(w.iter().all(|v| *v >= 0.0));
        Self { w }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.w.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.w
    }
}

/// `M(w) = Σ⁻¹ + (1/σ_N²) Σ_i w_i a_i a_iᵀ` together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct InfoMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl InfoMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular factor `L` with `M = L Lᵀ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Solves `M Z = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}

fn check_design(problem: &DesignProblem, design: &Design) -> Result<()> {
    if design.len() != problem.m() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} weights, problem has m={}",
            design.len(),
            problem.m()
        )));
    }
    Ok(())
}

fn check_estimator(problem: &DesignProblem, x: &EstimatorMatrix) -> Result<()> {
    if x.shape() != (problem.r(), problem.m()) {
        return Err(Error::DimensionMismatch(format!(
            "estimator is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            problem.r(),
            problem.m()
        )));
    }
    Ok(())
}

pub fn info_matrix(problem: &DesignProblem, design: &Design) -> Result<InfoMatrix> {
    check_design(problem, design)?;
    let a = problem.a();
    let mut weighted = a.clone();
    for (mut row, w) in weighted.row_iter_mut().zip(design.weights().iter()) {
        row *= *w / problem.sigma2n();
    }
    let mut matrix = problem.sigma_inv() + a.transpose() * weighted;
    matrix = (&matrix + matrix.transpose()) * 0.5;
    let chol = Cholesky::new(matrix.clone())
        .ok_or_else(|| Error::NumericalFailure("information matrix factorization failed".into()))?;
    Ok(InfoMatrix { matrix, chol })
}

/// `Φ_{A_K}(w) = trace Kᵀ M(w)⁻¹ K`.
pub fn phi_ak(problem: &DesignProblem, design: &Design) -> Result<f64> {
    let info = info_matrix(problem, design)?;
    Ok(phi_from_info(problem, &info))
}

fn phi_from_info(problem: &DesignProblem, info: &InfoMatrix) -> f64 {
    let z = info.solve(problem.k());
    problem.k().component_mul(&z).sum().max(0.0)
}

fn grad_from_info(problem: &DesignProblem, info: &InfoMatrix) -> DVector<f64> {
    // Z = M⁻¹ Aᵀ, column i is M⁻¹ a_i.
    let z = info.solve(&problem.a().transpose());
    let kz = problem.k().transpose() * z;
    DVector::from_iterator(
        problem.m(),
        kz.column_iter()
            .map(|c| c.norm_squared() / problem.sigma2n()),
    )
}

/// The negated gradient `d_i = ‖Kᵀ M(w)⁻¹ a_i‖² / σ_N²`.
pub fn grad_phi(problem: &DesignProblem, design: &Design) -> Result<DVector<f64>> {
    let info = info_matrix(problem, design)?;
    Ok(grad_from_info(problem, &info))
}

/// `Φ` and `d` from a single factorization.
pub fn phi_and_grad(problem: &DesignProblem, design: &Design) -> Result<(f64, DVector<f64>)> {
    let info = info_matrix(problem, design)?;
    Ok((
        phi_from_info(problem, &info),
        grad_from_info(problem, &info),
    ))
}

/// `XA − Kᵀ` (r×n).
pub(crate) fn residual(problem: &DesignProblem, x: &EstimatorMatrix) -> DMatrix<f64> {
    x.matrix() * problem.a() - problem.k().transpose()
}

/// `f(X) = trace[(XA − Kᵀ) Σ (XA − Kᵀ)ᵀ]`.
pub fn f_smooth(problem: &DesignProblem, x: &EstimatorMatrix) -> Result<f64> {
    check_estimator(problem, x)?;
    let res = residual(problem, x);
    Ok((&res * problem.sigma()).component_mul(&res).sum().max(0.0))
}

/// `∇f(X) = 2 (XA − Kᵀ) Σ Aᵀ` (r×m).
pub fn grad_f(problem: &DesignProblem, x: &EstimatorMatrix) -> Result<DMatrix<f64>> {
    check_estimator(problem, x)?;
    let res = residual(problem, x);
    Ok(res * problem.a_sigma().transpose() * 2.0)
}

/// `F(X) = f(X) + σ_N² Ω(X)²`, the reformulated objective.
pub fn composite_objective(problem: &DesignProblem, x: &EstimatorMatrix) -> Result<f64> {
    let om = omega(x);
    Ok(f_smooth(problem, x)? + problem.sigma2n() * om * om)
}

/// `L = trace(A Σ Aᵀ)`, the step constant used by the rate bounds.
#[allow(non_snake_case)]
pub fn lipschitz_L(problem: &DesignProblem) -> f64 {
    problem.a_sigma_a().sum()
}

/// `2 λ_max(A Σ Aᵀ)`, the exact Lipschitz constant of `∇f`.
///
/// Never smaller than half of [`lipschitz_L`]; it exceeds it only when
/// `AΣAᵀ` has one dominant eigenvalue.
pub fn smoothness_constant(problem: &DesignProblem) -> f64 {
    // λ_max(AΣAᵀ) = λ_max(LᵀAᵀAL) with Σ = LLᵀ, an n×n problem.
    let l = problem.sigma_cholesky().l();
    let al = problem.a() * &l;
    let gram = al.transpose() * &al;
    let eig = SymmetricEigen::new(gram);
    2.0 * eig.eigenvalues.max().max(0.0)
}
