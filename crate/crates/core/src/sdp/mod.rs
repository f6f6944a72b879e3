//! Complex Hermitian semidefinite programs in the form
//!
//! ```text
//! maximize   Σ_b ⟨C_b, X_b⟩ + offset
//! subject to Σ_t w_t K_t X_{b(t)} K_t† = T_c   for every constraint c
//!            X_b ⪰ 0
//! ```
//!
//! with dual `minimize Σ_c ⟨T_c, Y_c⟩ + offset` subject to
//! `Σ_c Σ_t w_t K_t† Y_c K_t − C_b ⪰ 0`. Constraint maps are sums of sparse
//! conjugations, which is enough for partial traces, identity embeddings,
//! factor permutations and sub-block selections.

mod builders;
mod maps;
mod solver;

pub use builders::{build_strategy_dual, build_strategy_primal, optimal_strategy_value, StrategyCertificate, StrategyOptimum};
pub use maps::{dense_op, factor_map, identity_op, select_block};
pub use solver::solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::matrix::Matrix;
use crate::{HermitianOperator, C64};

/// Default cap on `Σ_b 2·dim(X_b)`, the size of the equivalent real
/// symmetric program.
pub const DEFAULT_MAX_REAL_DIM: usize = 1024;

/// A sparse complex matrix given by `(row, col, value)` triplets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOp {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(Error::DimensionMismatch(format!("entry ({r}, {c}) outside a {rows}x{cols} operator")));
        }
        Ok(SparseOp { rows, cols, entries })
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rows * self.cols];
        for &(r, c, v) in &self.entries {
            out[r * self.cols + c] += v;
        }
        out
    }
}

/// `w · K X_block K†`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    pub weight: f64,
    pub op: SparseOp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<Term>,
    /// Hermitian right-hand side; its layout fixes the constraint space.
    pub target: HermitianOperator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub layout: Layout,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    /// One entry per block; `None` is a zero coefficient.
    pub objective: Vec<Option<HermitianOperator>>,
    pub constraints: Vec<Constraint>,
    pub offset: f64,
}

impl SdpProblem {
    pub fn new(blocks: Vec<Block>) -> Self {
        let objective = vec![None; blocks.len()];
        SdpProblem { blocks, objective, constraints: vec![], offset: 0.0 }
    }

    pub fn block_index(&self, label: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn set_objective(&mut self, block: usize, c: HermitianOperator) -> Result<()> {
        let b = self.blocks.get(block).ok_or_else(|| Error::InvalidInput(format!("no block {block}")))?;
        let c = if c.layout() == &b.layout { c } else { c.permute_factors(&b.layout.labels())? };
        self.objective[block] = Some(c);
        Ok(())
    }

    pub fn add_constraint(&mut self, label: impl Into<String>, terms: Vec<Term>, target: HermitianOperator) -> Result<()> {
        let m = target.dim();
        for t in &terms {
            let b = self.blocks.get(t.block).ok_or_else(|| Error::InvalidInput(format!("no block {}", t.block)))?;
            if t.op.rows != m || t.op.cols != b.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "term on block `{}` maps {} -> {}, constraint needs {} -> {m}",
                    b.label,
                    t.op.cols,
                    t.op.rows,
                    b.dim()
                )));
            }
        }
        self.constraints.push(Constraint { label: label.into(), terms, target });
        Ok(())
    }

    /// Number of real scalar equations.
    pub fn num_equations(&self) -> usize {
        self.constraints.iter().map(|c| c.target.dim().pow(2)).sum()
    }

    pub fn real_dim(&self) -> usize {
        self.blocks.iter().map(|b| 2 * b.dim()).sum()
    }

    /// `Σ_t w_t K_t X K_t†` for every constraint, as dense row-major data.
    pub fn apply_constraints(&self, xs: &[HermitianOperator]) -> Result<Vec<Vec<C64>>> {
        self.constraints
            .iter()
            .map(|c| {
                let m = c.target.dim();
                let mut out = vec![C64::new(0.0, 0.0); m * m];
                for t in &c.terms {
                    let x = xs[t.block].data();
                    let n = self.blocks[t.block].dim();
                    for &(p, r, kpr) in &t.op.entries {
                        for &(q, s, kqs) in &t.op.entries {
                            out[p * m + q] += kpr * x[r * n + s] * kqs.conj() * t.weight;
                        }
                    }
                }
                Ok(out)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖b − 𝒜X‖ / (1 + ‖b‖)`.
    pub primal_eq: f64,
    /// `‖𝒜*y − C − Z‖ / (1 + ‖C‖)`.
    pub dual_ineq: f64,
    /// Smallest eigenvalue over all primal and dual slack blocks.
    pub psd_min_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_blocks: Vec<HermitianOperator>,
    /// One Hermitian multiplier per constraint, on the constraint's layout.
    pub dual_multipliers: Vec<HermitianOperator>,
    pub dual_slacks: Vec<HermitianOperator>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    /// `max(0, p − d)`.
    pub weak_duality_violation: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Turns a non-optimal status into an error.
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver(format!(
                "status {:?} after {} iterations (gap {:e}, primal residual {:e})",
                self.status, self.iterations, self.gap, self.residuals.primal_eq
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative gap target.
    pub gap_tol: f64,
    /// Relative primal and dual infeasibility target.
    pub feas_tol: f64,
    pub max_iter: usize,
    pub max_real_dim: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { gap_tol: 1e-9, feas_tol: 1e-10, max_iter: 200, max_real_dim: DEFAULT_MAX_REAL_DIM }
    }
}

/// The real symmetric image `[[Re M, −Im M], [Im M, Re M]]` of a complex
/// square matrix, row-major of size `2n × 2n`.
pub fn realify(m: &Matrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("realification needs a square matrix".into()));
    }
    let n = m.nrows();
    let mut out = vec![0.0; 4 * n * n];
    for r in 0..n {
        for c in 0..n {
            let z = m.get(r, c);
            out[r * 2 * n + c] = z.re;
            out[r * 2 * n + n + c] = -z.im;
            out[(n + r) * 2 * n + c] = z.im;
            out[(n + r) * 2 * n + n + c] = z.re;
        }
    }
    Ok(out)
}
