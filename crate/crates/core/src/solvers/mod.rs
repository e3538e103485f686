//! First-order solvers for the reformulated problem and the two classical
//! simplex baselines.
//!
//! | algorithm | space | step |
//! |-----------|-------|------|
//! | `fb`      | `X`   | forward-backward with backtracking |
//! | `fista`   | `X`   | accelerated forward-backward |
//! | `abcd-cy` | `X`   | exact block minimization, cyclic order |
//! | `abcd-rp` | `X`   | exact block minimization, fresh random permutation per pass |
//! | `vdm`     | `w`   | vertex direction with backtracking |
//! | `mul`     | `w`   | multiplicative update |
//!
//! Every solver certifies its current design with a duality bound and stops
//! once `ε_k ≤ tol` or after `max_iter` iterations. One iteration of the block
//! methods is a full pass over the `m` columns.

mod abcd;
mod backtrack;
mod multiplicative;
mod proximal;
mod vertex;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::metrics::{
    certificate, certificate_from, delta_support, design_from_estimator, efficiency_gap,
    DualityCertificate,
};
use crate::model::{composite_objective, phi_and_grad, Design, DesignProblem};
use crate::penalty::EstimatorMatrix;

pub use abcd::{block_minimize, solve_abcd, BlockContext};
pub use backtrack::{backtrack_step, MAX_BACKTRACKS};
pub use multiplicative::{multiplicative_update, solve_mul};
pub use proximal::{next_momentum, solve_fb, solve_fista, FistaState};
pub use vertex::solve_vdm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Fb,
    Fista,
    AbcdCyclic,
    AbcdRandPerm,
    Vdm,
    Mul,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Fb,
        Algorithm::Fista,
        Algorithm::AbcdCyclic,
        Algorithm::AbcdRandPerm,
        Algorithm::Vdm,
        Algorithm::Mul,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Fb => "fb",
            Algorithm::Fista => "fista",
            Algorithm::AbcdCyclic => "abcd-cy",
            Algorithm::AbcdRandPerm => "abcd-rp",
            Algorithm::Vdm => "vdm",
            Algorithm::Mul => "mul",
        }
    }

    /// Whether the algorithm iterates on the estimator matrix `X`.
    pub fn is_estimator_space(self) -> bool {
        !matches!(self, Algorithm::Vdm | Algorithm::Mul)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fb" => Ok(Algorithm::Fb),
            "fista" => Ok(Algorithm::Fista),
            "abcd-cy" | "abcd_cyclic" => Ok(Algorithm::AbcdCyclic),
            "abcd-rp" | "abcd_randperm" => Ok(Algorithm::AbcdRandPerm),
            "vdm" => Ok(Algorithm::Vdm),
            "mul" => Ok(Algorithm::Mul),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

/// How FB and FISTA choose their step constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// Multiply the previous constant by `eta` until the descent test holds.
    #[default]
    Backtracking,
    /// Constant step from the exact smoothness constant of `f`.
    Fixed,
}

/// Step length of the vertex direction method for a trial constant `L̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VdmStep {
    /// `α = min(s / (L̄‖e_i − w‖²), 1)`, the minimizer of the quadratic
    /// model being tested.
    #[default]
    QuadraticModel,
    /// `α = 1/L̄`, with `L̄ ≥ 1`. Its only fixed points are vertices, so it
    /// stalls on instances whose optimal design is not a vertex.
    Reciprocal,
}

/// When a run counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// `ε_k ≤ tol` for the current (or recovered) design.
    #[default]
    Certificate,
    /// Additionally requires `1 − Φ(w_k)(1 − ε_k)/F(X_k) ≤ tol` for the
    /// estimator-space solvers, so that `X_k` itself is near optimal and not
    /// only its column proportions. Same as `Certificate` for VDM and MUL.
    ObjectiveGap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub max_iter: u64,
    /// Stop when `ε_k ≤ tol`.
    pub tol: f64,
    /// Backtracking multiplier, `> 1`.
    pub eta: f64,
    /// Initial step constant, `> 0`.
    pub l0: f64,
    pub seed: u64,
    /// Certificate cadence for the `X`-space solvers.
    pub trace_every: u64,
    pub step_rule: StepRule,
    pub stop_rule: StopRule,
    pub vdm_step: VdmStep,
    /// Record wall-clock time per iteration. Off by default so traces are
    /// reproducible byte for byte.
    pub record_time: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            max_iter: 100_000,
            tol: 1e-7,
            eta: 2.0,
            l0: 1.0,
            seed: 0,
            trace_every: 1,
            step_rule: StepRule::Backtracking,
            stop_rule: StopRule::Certificate,
            vdm_step: VdmStep::QuadraticModel,
            record_time: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: u64) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eta must exceed 1, got {}",
                self.eta
            )));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l0 must be positive, got {}",
                self.l0
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidArgument(
                "trace_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One row of a [`SolveTrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveRecord {
    pub iter: u64,
    /// `Φ_{A_K}` at the current design (recovered from `X` for the
    /// estimator-space solvers), as of the last certificate.
    pub objective: f64,
    pub eps_bound: f64,
    /// Nonzero columns of `X`, or positive weights of `w`.
    pub support: usize,
    /// Weights above `0.01/m`.
    pub delta001: usize,
    /// Step constant `L_k`; zero for solvers without a line search.
    pub step_l: f64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<SolveRecord>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&SolveRecord> {
        self.records.last()
    }

    /// First iteration whose objective reaches efficiency `1 − gap` against `rho`.
    pub fn first_reaching(&self, rho: f64, gap: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| efficiency_gap(rho, r.objective) <= gap)
            .map(|r| r.iter)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub algorithm: Algorithm,
    pub design: Design,
    /// `Φ_{A_K}` at `design`.
    pub objective: f64,
    pub certificate: DualityCertificate,
    pub estimator: Option<EstimatorMatrix>,
    pub trace: SolveTrace,
    /// Best certified lower bound `max_k Φ(w_k)(1 − ε_k)` on the optimal value.
    pub rho_hint: f64,
    /// The final design was the uniform fallback for `X = 0`.
    pub degenerate: bool,
    pub iterations: u64,
    pub converged: bool,
}

/// Starting point for a run.
#[derive(Debug, Clone, Default)]
pub enum Start {
    /// `X₀ = 0` or `w₀` uniform.
    #[default]
    Default,
    Estimator(EstimatorMatrix),
    Design(Design),
}

/// Progress notifications passed to an observer.
#[derive(Debug)]
pub enum SolverEvent<'a> {
    /// Iterate `X_k` after iteration `iter` of an estimator-space solver.
    Iterate {
        iter: u64,
        x: &'a EstimatorMatrix,
        step_l: f64,
    },
    /// `X` right after block `index` was replaced during pass `pass`.
    Block {
        pass: u64,
        index: usize,
        x: &'a EstimatorMatrix,
    },
    /// Design `w_k` after iteration `iter` of a simplex solver.
    Design {
        iter: u64,
        design: &'a Design,
        step_l: f64,
    },
}

pub type Observer<'o> = dyn FnMut(&SolverEvent<'_>) + 'o;

/// Runs `config.algorithm` from its default starting point.
pub fn solve(problem: &DesignProblem, config: &SolverConfig) -> Result<SolveResult> {
    solve_with(problem, config, Start::Default, &mut |_| {})
}

/// Runs `config.algorithm` from `start`, reporting every iterate to `observer`.
pub fn solve_with(
    problem: &DesignProblem,
    config: &SolverConfig,
    start: Start,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    config.validate()?;
    match config.algorithm {
        Algorithm::Fb => proximal::run_fb(problem, config, start, observer),
        Algorithm::Fista => proximal::run_fista(problem, config, start, observer),
        Algorithm::AbcdCyclic | Algorithm::AbcdRandPerm => {
            abcd::run(problem, config, start, observer)
        }
        Algorithm::Vdm => vertex::run(problem, config, start, observer),
        Algorithm::Mul => multiplicative::run(problem, config, start, observer),
    }
}

fn expect_algorithm(config: &SolverConfig, allowed: &[Algorithm]) -> Result<()> {
    if allowed.contains(&config.algorithm) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "configuration is for '{}'",
            config.algorithm
        )))
    }
}

fn initial_estimator(problem: &DesignProblem, start: Start) -> Result<EstimatorMatrix> {
    match start {
        Start::Default => Ok(EstimatorMatrix::zeros(problem.r(), problem.m())),
        Start::Estimator(x) if x.shape() == (problem.r(), problem.m()) => Ok(x),
        Start::Estimator(x) => Err(Error::DimensionMismatch(format!(
            "warm start is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            problem.r(),
            problem.m()
        ))),
        Start::Design(_) => Err(Error::InvalidArgument(
            "estimator-space solvers need an estimator warm start".into(),
        )),
    }
}

fn initial_design(problem: &DesignProblem, start: Start) -> Result<Design> {
    match start {
        Start::Default => Ok(Design::uniform(problem.m())),
        Start::Design(w) if w.len() == problem.m() => Ok(w),
        Start::Design(w) => Err(Error::DimensionMismatch(format!(
            "warm start has {} weights, expected {}",
            w.len(),
            problem.m()
        ))),
        Start::Estimator(_) => Err(Error::InvalidArgument(
            "simplex solvers need a design warm start".into(),
        )),
    }
}

/// Certificate for the design recovered from `X`.
///
/// `X = 0` has no design; it is reported with `ε = 1` unless `K = 0`, in which
/// case `X = 0` is optimal with value zero.
pub(crate) fn certify_estimator(
    problem: &DesignProblem,
    x: &EstimatorMatrix,
) -> Result<(Design, DualityCertificate, bool)> {
    let rec = design_from_estimator(x);
    if rec.degenerate {
        let (phi, d) = phi_and_grad(problem, &rec.design)?;
        let cert = if problem.is_trivial() {
            certificate_from(phi, d, &rec.design)
        } else {
            DualityCertificate::uninformative(phi, d)
        };
        return Ok((rec.design, cert, true));
    }
    let cert = certificate(problem, &rec.design)?;
    Ok((rec.design, cert, false))
}

/// Accumulates trace rows and the best certified lower bound.
pub(crate) struct Recorder {
    trace: SolveTrace,
    clock: Option<Instant>,
    rho_hint: f64,
}

impl Recorder {
    pub(crate) fn new(config: &SolverConfig) -> Self {
        Self {
            trace: SolveTrace::default(),
            clock: config.record_time.then(Instant::now),
            rho_hint: 0.0,
        }
    }

    pub(crate) fn certified(&mut self, cert: &DualityCertificate) {
        self.rho_hint = self.rho_hint.max(cert.rho_lower_bound());
    }

    pub(crate) fn push(
        &mut self,
        iter: u64,
        cert: &DualityCertificate,
        support: usize,
        design: &Design,
        step_l: f64,
    ) {
        let elapsed_ns = self
            .clock
            .map(|c| u64::try_from(c.elapsed().as_nanos()).unwrap_or(u64::MAX))
            .unwrap_or(0);
        self.trace.records.push(SolveRecord {
            iter,
            objective: cert.phi,
            eps_bound: cert.eps,
            support,
            delta001: delta_support(design),
            step_l,
            elapsed_ns,
        });
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        self,
        algorithm: Algorithm,
        design: Design,
        certificate: DualityCertificate,
        estimator: Option<EstimatorMatrix>,
        degenerate: bool,
        iterations: u64,
        converged: bool,
    ) -> SolveResult {
        SolveResult {
            algorithm,
            objective: certificate.phi,
            design,
            certificate,
            estimator,
            trace: self.trace,
            rho_hint: self.rho_hint,
            degenerate,
            iterations,
            converged,
        }
    }
}

/// Shared loop tail for the estimator-space solvers: certify on cadence,
/// record, and decide whether to stop.
pub(crate) struct EstimatorMonitor {
    pub(crate) recorder: Recorder,
    last: Option<(Design, DualityCertificate, bool)>,
    every: u64,
    max_iter: u64,
    tol: f64,
    stop_rule: StopRule,
}

impl EstimatorMonitor {
    pub(crate) fn new(config: &SolverConfig) -> Self {
        Self {
            recorder: Recorder::new(config),
            last: None,
            every: config.trace_every,
            max_iter: config.max_iter,
            tol: config.tol,
            stop_rule: config.stop_rule,
        }
    }

    /// Returns true when the run should stop after this iteration.
    pub(crate) fn observe(
        &mut self,
        problem: &DesignProblem,
        iter: u64,
        x: &EstimatorMatrix,
        step_l: f64,
    ) -> Result<bool> {
        let fresh = iter.is_multiple_of(self.every) || iter == self.max_iter || self.last.is_none();
        if fresh {
            let state = certify_estimator(problem, x)?;
            self.recorder.certified(&state.1);
            self.last = Some(state);
        }
        let (_, cert, _) = self.last.as_ref().expect("certificate computed above");
        let current = design_from_estimator(x).design;
        self.recorder
            .push(iter, cert, x.nonzero_columns(), &current, step_l);
        if !(fresh && cert.eps <= self.tol) {
            return Ok(false);
        }
        Ok(match self.stop_rule {
            StopRule::Certificate => true,
            StopRule::ObjectiveGap => {
                let value = composite_objective(problem, x)?;
                value <= 0.0 || 1.0 - cert.rho_lower_bound() / value <= self.tol
            }
        })
    }

    pub(crate) fn finish(
        mut self,
        problem: &DesignProblem,
        algorithm: Algorithm,
        x: EstimatorMatrix,
        iterations: u64,
        converged: bool,
    ) -> Result<SolveResult> {
        // the last row is always certified fresh, but recompute if the loop
        // ended between evaluations
        let (design, cert, degenerate) = match self.last.take() {
            Some(state)
                if converged
                    || iterations.is_multiple_of(self.every)
                    || iterations == self.max_iter =>
            {
                state
            }
            _ => certify_estimator(problem, &x)?,
        };
        self.recorder.certified(&cert);
        Ok(self.recorder.finish(
            algorithm,
            design,
            cert,
            Some(x),
            degenerate,
            iterations,
            converged,
        ))
    }
}
