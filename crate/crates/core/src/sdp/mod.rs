//! Dense semidefinite programming for problems in linear-matrix-inequality form.
//!
//! A [`SdpProblem`] reads
//!
//! ```text
//! minimize    c^T y
//! subject to  F0_b + sum_i y_i F_ib  >= 0    for every block b
//!             a_k^T y = b_k                  for every equality k
//! ```
//!
//! Coefficient matrices are stored sparsely (a list of upper-triangle
//! entries per variable) because the SOS compilation produces one or two
//! nonzeros per Gram variable. [`solve_sdp`] runs the reference
//! [`BarrierSolver`]; anything implementing [`SdpSolver`] can stand in for it.

mod barrier;
mod elim;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DccmError, Result};
use crate::linalg;

pub use barrier::BarrierSolver;

/// A symmetric matrix given by entries `(row, col, value)`. Each entry stands
/// for both `(row, col)` and `(col, row)`; repeated positions accumulate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((i.min(j), i.max(j), v));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        self.add_to(&mut m, 1.0);
        m
    }

    pub fn add_to(&self, m: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += scale * v;
            if i != j {
                m[(j, i)] += scale * v;
            }
        }
    }

    fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut s = SymSparse::default();
        for j in 0..m.ncols() {
            for i in 0..=j {
                s.push(i, j, m[(i, j)]);
            }
        }
        s
    }
}

/// One constraint `F0 + sum_i y_i F_i >= 0` of dimension `dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmiBlock {
    pub dim: usize,
    pub constant: SymSparse,
    /// Coefficient matrices keyed by variable index; absent means zero.
    pub coeffs: BTreeMap<usize, SymSparse>,
}

impl LmiBlock {
    pub fn new(dim: usize) -> Self {
        LmiBlock {
            dim,
            constant: SymSparse::default(),
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a block from dense matrices: `coeffs[i]` multiplies `y_i`.
    pub fn from_dense(constant: &DMatrix<f64>, coeffs: &[DMatrix<f64>]) -> Result<Self> {
        let dim = constant.nrows();
        let check = |m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(DccmError::dim("LMI coefficient matrix", dim, m.nrows()));
            }
            let asym = (m - m.transpose()).amax();
            if asym > 1e-12 {
                return Err(DccmError::InvalidProblem(format!(
                    "LMI matrix is not symmetric (max asymmetry {asym:e})"
                )));
            }
            Ok(())
        };
        check(constant)?;
        let mut block = LmiBlock::new(dim);
        block.constant = SymSparse::from_dense(constant);
        for (i, m) in coeffs.iter().enumerate() {
            check(m)?;
            let s = SymSparse::from_dense(m);
            if !s.is_empty() {
                block.coeffs.insert(i, s);
            }
        }
        Ok(block)
    }

    pub fn add_constant(&mut self, i: usize, j: usize, v: f64) {
        self.constant.push(i, j, v);
    }

    pub fn add_coeff(&mut self, var: usize, i: usize, j: usize, v: f64) {
        self.coeffs.entry(var).or_default().push(i, j, v);
    }

    /// `F0 + sum_i y_i F_i` as a dense matrix.
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.dim);
        for (&var, f) in &self.coeffs {
            f.add_to(&mut m, y[var]);
        }
        m
    }
}

/// `sum_k coeffs[k].1 * y[coeffs[k].0] = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    #[serde(default)]
    pub equalities: Vec<LinearEquality>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        SdpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            blocks: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(DccmError::dim("SDP objective", self.num_vars, self.objective.len()));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let in_range = |s: &SymSparse| s.entries.iter().all(|&(i, j, _)| i < block.dim && j < block.dim);
            if !in_range(&block.constant) || !block.coeffs.values().all(in_range) {
                return Err(DccmError::InvalidProblem(format!(
                    "block {b}: entry outside a {0}x{0} matrix",
                    block.dim
                )));
            }
            if let Some((&var, _)) = block.coeffs.range(self.num_vars..).next() {
                return Err(DccmError::InvalidProblem(format!(
                    "block {b}: variable {var} out of range ({} variables)",
                    self.num_vars
                )));
            }
            let finite = |s: &SymSparse| s.entries.iter().all(|e| e.2.is_finite());
            if !finite(&block.constant) || !block.coeffs.values().all(finite) {
                return Err(DccmError::InvalidProblem(format!("block {b}: non-finite entry")));
            }
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            if eq.coeffs.iter().any(|&(v, _)| v >= self.num_vars) {
                return Err(DccmError::InvalidProblem(format!(
                    "equality {k}: variable out of range"
                )));
            }
            if !eq.rhs.is_finite() || eq.coeffs.iter().any(|c| !c.1.is_finite()) {
                return Err(DccmError::InvalidProblem(format!("equality {k}: non-finite value")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(DccmError::InvalidProblem("non-finite objective".into()));
        }
        Ok(())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Smallest eigenvalue over all blocks at `y` (`+inf` without blocks).
    pub fn min_block_eigenvalue(&self, y: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::lambda_min(&b.evaluate(y)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute equality residual at `y`.
    pub fn equality_residual(&self, y: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|eq| (eq.coeffs.iter().map(|&(v, c)| c * y[v]).sum::<f64>() - eq.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Writes the problem as JSON for cross-checking with other solvers.
    /// The layout mirrors these structs and is not a stable format.
    pub fn write_debug_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| DccmError::Format {
            path: path.display().to_string(),
            pointer: String::new(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|source| DccmError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            feas_tol: 1e-7,
            gap_tol: 1e-7,
            max_iters: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    pub status: SdpStatus,
    pub min_block_eigenvalue: f64,
    pub objective_value: f64,
    /// Outer iterations (centering passes) of the barrier method.
    pub iterations: usize,
    pub newton_steps: usize,
    /// Human-readable reason for a non-optimal status.
    pub detail: String,
}

pub trait SdpSolver {
    fn solve(&self, problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution>;
}

/// Solves `problem` with the reference barrier solver.
pub fn solve_sdp(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    BarrierSolver::default().solve(problem, opts)
}

/// Positive-semidefiniteness test: `(lambda_min >= -tol, lambda_min)`.
pub fn psd_check(s: &DMatrix<f64>, tol: f64) -> (bool, f64) {
    let lmin = linalg::lambda_min(s);
    (lmin >= -tol, lmin)
}
