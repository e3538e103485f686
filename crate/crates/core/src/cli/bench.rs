//! Side-by-side runs of several algorithms on one instance.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::files::{SolveReport, SCHEMA_VERSION};
use super::plot::{render_svg, Panel, Series};
use super::trace::write_trace;
use crate::metrics::efficiency_gap;
use crate::model::DesignProblem;
use crate::oracle::reference_rho;
use crate::solvers::{solve, Algorithm, SolveResult, SolverConfig};

/// Efficiency gaps `10^{-k}` reported in the summary.
pub const GAP_EXPONENTS: [i32; 3] = [2, 4, 6];

/// Floor for `log10(1 − eff)` when the gap is exactly zero.
const LOG_FLOOR: f64 = -16.0;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub algorithms: Vec<Algorithm>,
    pub iters: u64,
    pub tol: f64,
    pub eta: f64,
    pub l0: f64,
    pub seed: u64,
    pub reference_tol: f64,
    /// Upper bound on worker threads; `None` uses all available cores.
    pub threads: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            iters: 5000,
            tol: 0.0,
            eta: 2.0,
            l0: 1.0,
            seed: 0,
            reference_tol: 1e-11,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReached {
    /// `k` in `1 − 10^{-k}`.
    pub k: i32,
    /// First iteration at that efficiency, if any.
    pub iteration: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub iterations: u64,
    pub converged: bool,
    pub final_phi: f64,
    pub final_eps: f64,
    pub final_efficiency_gap: f64,
    pub support: usize,
    pub delta001: usize,
    pub reached: Vec<GapReached>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub schema_version: u32,
    /// Reference optimal value `Φ(w*)`, used for every efficiency.
    pub rho: f64,
    pub rho_lower: f64,
    pub reference_tol: f64,
    pub reference_eps: f64,
    pub reference_iterations: u64,
    pub algorithms: Vec<AlgorithmSummary>,
}

fn worker_count(requested: Option<usize>, jobs: usize) -> usize {
    let env = std::env::var("AOPT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|v| *v > 0);
    let cap = requested
        .or(env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.clamp(1, jobs.max(1))
}

fn summarize(result: &SolveResult, rho: f64) -> AlgorithmSummary {
    let report = SolveReport::from_result(result);
    AlgorithmSummary {
        algorithm: report.algorithm,
        iterations: result.iterations,
        converged: result.converged,
        final_phi: result.objective,
        final_eps: result.certificate.eps,
        final_efficiency_gap: efficiency_gap(rho, result.objective),
        support: report.support,
        delta001: report.delta001,
        reached: GAP_EXPONENTS
            .iter()
            .map(|k| GapReached {
                k: *k,
                iteration: result.trace.first_reaching(rho, 10f64.powi(-k)),
            })
            .collect(),
    }
}

fn log10_or_floor(v: f64) -> f64 {
    if v > 0.0 {
        v.log10().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// The three convergence panels: efficiency gap, certificate, support.
pub fn panels(results: &[SolveResult], rho: f64) -> [Panel; 3] {
    let series = |f: &dyn Fn(&crate::solvers::SolveRecord) -> f64| -> Vec<Series> {
        results
            .iter()
            .map(|r| {
                let pts = r
                    .trace
                    .records
                    .iter()
                    .map(|rec| (rec.iter as f64, f(rec)))
                    .collect();
                Series::for_algorithm(r.algorithm, pts)
            })
            .collect()
    };
    [
        Panel {
            title: "Efficiency".into(),
            x_label: "iteration".into(),
            y_label: "1 - efficiency".into(),
            log_y: true,
            series: series(&|rec| log10_or_floor(efficiency_gap(rho, rec.objective))),
        },
        Panel {
            title: "Duality bound".into(),
            x_label: "iteration".into(),
            y_label: "epsilon".into(),
            log_y: true,
            series: series(&|rec| log10_or_floor(rec.eps_bound)),
        },
        Panel {
            title: "Support size".into(),
            x_label: "iteration".into(),
            y_label: "support".into(),
            log_y: false,
            series: series(&|rec| rec.support as f64),
        },
    ]
}

/// Panel file names, in the order returned by [`panels`].
pub const PANEL_FILES: [&str; 3] = ["efficiency.svg", "eps.svg", "support.svg"];

/// Runs every requested algorithm and writes traces, reports, a summary and
/// plots into `out`.
pub fn run_bench(
    problem: &DesignProblem,
    opts: &BenchOptions,
    out: &Path,
) -> anyhow::Result<BenchSummary> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let reference = reference_rho(problem, opts.reference_tol).context("reference run failed")?;

    let configs: Vec<SolverConfig> = opts
        .algorithms
        .iter()
        .map(|alg| {
            let mut cfg = SolverConfig::new(*alg)
                .with_max_iter(opts.iters)
                .with_tol(opts.tol)
                .with_seed(opts.seed);
            cfg.eta = opts.eta;
            cfg.l0 = opts.l0;
            cfg
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(opts.threads, configs.len()))
        .build()?;
    let results: Vec<SolveResult> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| solve(problem, cfg).with_context(|| format!("{} failed", cfg.algorithm)))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    for res in &results {
        let name = res.algorithm.as_str();
        let file = fs::File::create(out.join(format!("{name}.csv")))?;
        write_trace(std::io::BufWriter::new(file), &res.trace)?;
        fs::write(
            out.join(format!("{name}.json")),
            SolveReport::from_result(res).to_json()?,
        )?;
    }

    let summary = BenchSummary {
        schema_version: SCHEMA_VERSION,
        rho: reference.rho,
        rho_lower: reference.rho_lower,
        reference_tol: opts.reference_tol,
        reference_eps: reference.eps,
        reference_iterations: reference.iterations,
        algorithms: results
            .iter()
            .map(|r| summarize(r, reference.rho))
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(out.join("summary.json"), json)?;
    fs::write(out.join("summary.txt"), summary_table(&summary))?;

    for (panel, name) in panels(&results, reference.rho).iter().zip(PANEL_FILES) {
        fs::write(out.join(name), render_svg(panel))?;
    }
    Ok(summary)
}

/// Plain-text table of iterations needed per efficiency level.
pub fn summary_table(summary: &BenchSummary) -> String {
    let mut s = format!(
        "rho = {:.16e} (eps {:.3e})\n",
        summary.rho, summary.reference_eps
    );
    s.push_str(&format!("{:<8}", "algo"));
    for k in GAP_EXPONENTS {
        s.push_str(&format!("{:>10}", format!("1-1e-{k}")));
    }
    s.push_str(&format!("{:>12}{:>10}\n", "final eps", "support"));
    for a in &summary.algorithms {
        s.push_str(&format!("{:<8}", a.algorithm));
        for r in &a.reached {
            let cell = r.iteration.map_or("-".to_owned(), |i| i.to_string());
            s.push_str(&format!("{cell:>10}"));
        }
        s.push_str(&format!("{:>12.3e}{:>10}\n", a.final_eps, a.support));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_cap() {
        assert_eq!(worker_count(Some(3), 6), 3);
        assert_eq!(worker_count(Some(10), 2), 2);
        assert_eq!(worker_count(Some(0), 2), 1);
    }

    #[test]
    fn log_floor() {
        assert_eq!(log10_or_floor(0.0), LOG_FLOOR);
        assert_eq!(log10_or_floor(1e-3), -3.0);
    }
}
