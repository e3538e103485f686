//! Design recovery from an estimator matrix, duality certificates and
//! sparsity measures.
//!
//! For any design `w`, with `d = −∇Φ(w)`, the gap `s = max_i d_i − wᵀd`
//! bounds the optimal value from below: `ρ ≥ Φ(w)(1 − ε)` where
//! `ε = s/(Φ(w) + s)`. This is what makes tolerance-based stopping rigorous
//! for every solver in the crate, including the ones that never touch `w`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{phi_and_grad, Design, DesignProblem};
use crate::penalty::{omega, EstimatorMatrix};

/// Default `δ` threshold factor: weights above `0.01/m` count as support.
pub const DELTA_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct DualityCertificate {
    /// `d = −∇Φ(w)`.
    pub d: DVector<f64>,
    /// `s = max_i d_i − wᵀd`, clamped at zero.
    pub s: f64,
    /// `ε = s/(Φ + s)`; zero when both vanish.
    pub eps: f64,
    pub phi: f64,
}

impl DualityCertificate {
    /// The certified lower bound `Φ(1 − ε)` on the optimal value.
    pub fn rho_lower_bound(&self) -> f64 {
        self.phi * (1.0 - self.eps)
    }

    /// Certificate reported for an iterate that has no meaningful design.
    pub(crate) fn uninformative(phi: f64, d: DVector<f64>) -> Self {
        Self {
            d,
            s: f64::INFINITY,
            eps: 1.0,
            phi,
        }
    }
}

/// A design recovered from `X`, with a flag for the `Ω(X) = 0` fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredDesign {
    pub design: Design,
    pub degenerate: bool,
}

/// `w_i = ‖x_i‖ / Ω(X)`, or the uniform design when `X = 0`.
pub fn design_from_estimator(x: &EstimatorMatrix) -> RecoveredDesign {
    let norms = x.column_norms();
    let total: f64 = norms.iter().sum();
    if total > 0.0 {
        let w = DVector::from_iterator(norms.len(), norms.iter().map(|n| n / total));
        RecoveredDesign {
            design: Design::from_simplex(w),
            degenerate: false,
        }
    } else {
        RecoveredDesign {
            design: Design::uniform(x.ncols()),
            degenerate: true,
        }
    }
}

pub(crate) fn certificate_from(phi: f64, d: DVector<f64>, design: &Design) -> DualityCertificate {
    let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = (dmax - design.weights().dot(&d)).max(0.0);
    let denom = phi + s;
    let eps = if denom > 0.0 {
        (s / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    DualityCertificate { d, s, eps, phi }
}

pub fn certificate(problem: &DesignProblem, design: &Design) -> Result<DualityCertificate> {
    let (phi, d) = phi_and_grad(problem, design)?;
    Ok(certificate_from(phi, d, design))
}

/// `eff(w) = ρ / Φ(w)`.
pub fn efficiency(problem: &DesignProblem, design: &Design, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let (phi, _) = phi_and_grad(problem, design)?;
    if phi <= 0.0 {
        return Err(Error::DegenerateInstance(
            "criterion vanishes at this design".into(),
        ));
    }
    Ok(rho / phi)
}

/// `1 − ρ/Φ` from stored values, clamped at zero; zero when `Φ = 0`
/// (only possible when the optimum itself is zero).
pub fn efficiency_gap(rho: f64, phi: f64) -> f64 {
    if phi > 0.0 {
        (1.0 - rho / phi).max(0.0)
    } else {
        0.0
    }
}

/// Number of weights above `threshold_factor / m`.
pub fn support_size(design: &Design, threshold_factor: f64) -> usize {
    let cut = threshold_factor / design.len() as f64;
    design.weights().iter().filter(|w| **w > cut).count()
}

/// `δ_{0.01}(w)`.
pub fn delta_support(design: &Design) -> usize {
    support_size(design, DELTA_FACTOR)
}

/// Largest relative deviation of `‖x_i‖²/w_i²` from `Ω(X)²` over the points
/// where `w_i > 0`.
///
/// This is the stationarity condition of `w ↦ Σ_i ‖x_i‖²/w_i` on the simplex;
/// it vanishes exactly when `w` is proportional to the column norms.
pub fn kkt_simplex_residual_at(x: &EstimatorMatrix, design: &Design) -> Result<f64> {
    if design.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} weights, estimator has {} columns",
            design.len(),
            x.ncols()
        )));
    }
    let om = omega(x);
    if om <= 0.0 {
        return Err(Error::DegenerateInstance("estimator matrix is zero".into()));
    }
    let target = om * om;
    let norms = x.column_norms();
    let mut worst: f64 = 0.0;
    for (n, w) in norms.iter().zip(design.weights().iter()) {
        if *w > 0.0 {
            let ratio = n / w;
            worst = worst.max((ratio * ratio - target).abs() / target);
        } else if *n > 0.0 {
            // a column with mass but no weight makes J infinite
            return Ok(f64::INFINITY);
        }
    }
    Ok(worst)
}

/// KKT residual at the design recovered from `X` itself.
pub fn kkt_simplex_residual(x: &EstimatorMatrix) -> Result<f64> {
    let rec = design_from_estimator(x);
    if rec.degenerate {
        return Err(Error::DegenerateInstance("estimator matrix is zero".into()));
    }
    kkt_simplex_residual_at(x, &rec.design)
}
