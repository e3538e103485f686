//! Instance and result files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::metrics::delta_support;
use crate::model::DesignProblem;
use crate::solvers::SolveResult;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a [`DesignProblem`]. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "sigma2N")]
    pub sigma2n: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    /// n×r; identity when absent.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    /// n×n; identity when absent.
    #[serde(rename = "Sigma", default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub provenance: String,
}

fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}

fn is_identity(x: &DMatrix<f64>) -> bool {
    x.is_square() && *x == DMatrix::identity(x.nrows(), x.ncols())
}

fn from_row_major(
    name: &str,
    rows: usize,
    cols: usize,
    data: &[f64],
) -> anyhow::Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        bail!(
            "{name} has {} entries, expected {rows}x{cols} = {}",
            data.len(),
            rows * cols
        );
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

impl InstanceFile {
    /// Identity `K` and `Σ` are omitted from the file.
    pub fn from_problem(problem: &DesignProblem, provenance: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            m: problem.m(),
            n: problem.n(),
            r: problem.r(),
            sigma2n: problem.sigma2n(),
            a: row_major(problem.a()),
            k: (!is_identity(problem.k())).then(|| row_major(problem.k())),
            sigma: (!is_identity(problem.sigma())).then(|| row_major(problem.sigma())),
            provenance: provenance.into(),
        }
    }

    pub fn to_problem(&self) -> anyhow::Result<DesignProblem> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {}", self.schema_version);
        }
        let a = from_row_major("A", self.m, self.n, &self.a)?;
        let k = match &self.k {
            Some(k) => from_row_major("K", self.n, self.r, k)?,
            None if self.r == self.n => DMatrix::identity(self.n, self.n),
            None => bail!("K is absent but r = {} differs from n = {}", self.r, self.n),
        };
        let sigma = match &self.sigma {
            Some(s) => from_row_major("Sigma", self.n, self.n, s)?,
            None => DMatrix::identity(self.n, self.n),
        };
        Ok(DesignProblem::new(a, k, sigma, self.sigma2n)?)
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read instance {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("malformed instance {}", path.display()))
    }
}

pub fn load_problem(path: &Path) -> anyhow::Result<DesignProblem> {
    InstanceFile::read(path)?.to_problem()
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub iterations: u64,
    pub converged: bool,
    /// Final design weights.
    pub w: Vec<f64>,
    /// `Φ_{A_K}(w)`.
    pub phi: f64,
    pub eps: f64,
    /// `Φ(1 − ε)`.
    pub rho_lower_bound: f64,
    pub support: usize,
    pub delta001: usize,
    /// `X = 0` at the end, so `w` is the uniform fallback.
    pub degenerate: bool,
}

impl SolveReport {
    pub fn from_result(result: &SolveResult) -> Self {
        let support = match &result.estimator {
            Some(x) => x.nonzero_columns(),
            None => result
                .design
                .as_slice()
                .iter()
                .filter(|v| **v > 0.0)
                .count(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            algorithm: result.algorithm.as_str().to_owned(),
            iterations: result.iterations,
            converged: result.converged,
            w: result.design.as_slice().to_vec(),
            phi: result.objective,
            eps: result.certificate.eps,
            rho_lower_bound: result.certificate.rho_lower_bound(),
            support,
            delta001: delta_support(&result.design),
            degenerate: result.degenerate,
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
