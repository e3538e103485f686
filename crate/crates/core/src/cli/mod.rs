//! The `aopt` command-line tool.
//!
//! ```text
//! aopt gen random --m 100 --n 10 --seed 7 --out inst.json
//! aopt gen quadreg --d 2 --grid 21 --out quad.json
//! aopt solve --instance inst.json --algo fista --tol 1e-6 --trace fista.csv
//! aopt bench --instance inst.json --algos fb,fista,mul --iters 5000 --out runs/
//! ```
//!
//! Every command exits with status 0 only when it completed and the
//! post-run checks on its output passed.

pub mod bench;
pub mod files;
pub mod plot;
pub mod trace;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::instances::{gen_quadreg, gen_random};
use crate::model::SIMPLEX_TOL;
use crate::solvers::{solve, Algorithm, SolveResult, SolverConfig, StepRule, StopRule, VdmStep};
use bench::{run_bench, summary_table, BenchOptions};
use files::{load_problem, InstanceFile, SolveReport};
use trace::write_trace;

#[derive(Debug, Parser)]
#[command(
    name = "aopt",
    version,
    about = "Bayes A_K-optimal experimental design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run one algorithm on an instance.
    Solve(SolveArgs),
    /// Run several algorithms and plot their convergence.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub family: GenFamily,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenFamily {
    /// Gaussian regressors, K = Σ = I, σ_N² = 0.01.
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quadratic regression on a regular grid of [-1, 1]^d.
    Quadreg {
        #[arg(long)]
        d: usize,
        /// Points per axis.
        #[arg(long)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: u64,
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Certify the recovered design every this many iterations.
    #[arg(long, default_value_t = 1)]
    pub trace_every: u64,
    /// Use the constant step 1/L instead of backtracking.
    #[arg(long)]
    pub fixed_step: bool,
    /// Vertex direction method only: use the step 1/L instead of the
    /// minimizer of the quadratic model.
    #[arg(long)]
    pub vdm_reciprocal_step: bool,
    /// Also require the estimator objective to be certified within `tol`.
    #[arg(long)]
    pub objective_gap: bool,
    /// Record wall-clock time in the trace (makes output non-reproducible).
    #[arg(long)]
    pub time: bool,
    /// Trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Result JSON output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Comma-separated algorithm names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "fb,fista,abcd-cy,abcd-rp,vdm,mul"
    )]
    pub algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 5000)]
    pub iters: u64,
    /// Stop a run early once its certificate reaches this level.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance of the reference run that fixes ρ.
    #[arg(long, default_value_t = 1e-11)]
    pub reference_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `std::env::args` and runs; errors go to standard error.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Parses and runs an argument list (the first item is the program name).
pub fn run_from<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?)
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

pub fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let (problem, provenance) = match &args.family {
        GenFamily::Random { m, n, seed } => (
            gen_random(*m, *n, *seed)?,
            format!("gen random --m {m} --n {n} --seed {seed}"),
        ),
        GenFamily::Quadreg { d, grid } => (
            gen_quadreg(*d, *grid)?,
            format!("gen quadreg --d {d} --grid {grid}"),
        ),
    };
    let json = InstanceFile::from_problem(&problem, provenance).to_json()?;
    emit(args.out.as_deref(), &json)
}

/// Post-run invariants: a feasible design, a finite criterion, a certificate
/// in `[0, 1]` and a trace with increasing iteration numbers.
pub fn check_result(result: &SolveResult) -> anyhow::Result<()> {
    let w = result.design.as_slice();
    if w.iter().any(|v| !(*v >= 0.0)) {
        bail!("final design has negative or NaN weights");
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        bail!("final design sums to {total}");
    }
    if !(result.objective.is_finite() && result.objective >= 0.0) {
        bail!(
            "criterion value {} is not a finite nonnegative number",
            result.objective
        );
    }
    let eps = result.certificate.eps;
    if !(0.0..=1.0).contains(&eps) {
        bail!("certificate {eps} outside [0, 1]");
    }
    let recs = &result.trace.records;
    if recs.windows(2).any(|p| p[1].iter <= p[0].iter) {
        bail!("trace iterations are not increasing");
    }
    if recs
        .iter()
        .any(|r| !(r.objective.is_finite() && (0.0..=1.0).contains(&r.eps_bound)))
    {
        bail!("trace contains an invalid row");
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> anyhow::Result<()> {
    let problem = load_problem(&args.instance)?;
    let mut cfg = SolverConfig::new(args.algo)
        .with_tol(args.tol)
        .with_max_iter(args.max_iter)
        .with_seed(args.seed);
    cfg.eta = args.eta;
    cfg.l0 = args.l0;
    cfg.trace_every = args.trace_every;
    cfg.record_time = args.time;
    if args.objective_gap {
        cfg.stop_rule = StopRule::ObjectiveGap;
    }
    if args.vdm_reciprocal_step {
        cfg.vdm_step = VdmStep::Reciprocal;
    }
    if args.fixed_step {
        cfg.step_rule = StepRule::Fixed;
    }
    let result = solve(&problem, &cfg)?;
    if let Some(path) = &args.trace {
        let file =
            fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        write_trace(std::io::BufWriter::new(file), &result.trace)?;
    }
    emit(
        args.out.as_deref(),
        &SolveReport::from_result(&result).to_json()?,
    )?;
    check_result(&result)
}

pub fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    if args.algos.is_empty() {
        bail!("no algorithms requested");
    }
    let problem = load_problem(&args.instance)?;
    let opts = BenchOptions {
        algorithms: args.algos.clone(),
        iters: args.iters,
        tol: args.tol,
        eta: args.eta,
        l0: args.l0,
        seed: args.seed,
        reference_tol: args.reference_tol,
        threads: None,
    };
    let summary = run_bench(&problem, &opts, &args.out)?;
    print!("{}", summary_table(&summary));
    Ok(())
}
