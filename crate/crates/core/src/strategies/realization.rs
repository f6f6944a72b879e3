//! Unitary realizations: a pure memory state `v` and unitaries
//! `U_k: (Z_{k-1}, X_k) → (Y_k, Z_k)`, after which `Z_n` is discarded.
//!
//! The construction keeps, after round `k`, the joint vector of outputs,
//! memory and input references equal to `vec(√X_k)` with the purifying
//! copy embedded in `Z_k`. Each `U_k` is the unitary completion of the
//! partial isometry that connects two purifications of `X_{k-1} ⊗ I_{X_k}`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::{complete_isometry, eig_hermitian, matrix_sqrt_psd, orthonormalize};
use crate::matrix::{Hermitian, Matrix};
use crate::strategies::{choi_from_network, run_network, validate_strategy, RoundStructure, StrategyOperator};
use crate::{ComplexMatrix, C64};

/// Eigenvalues of `X_{k-1}` at or below this fraction of the largest are
/// treated as outside its support.
pub const REALIZATION_RANK_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryRealization {
    rounds: RoundStructure,
    #[serde(with = "crate::io::exact_complex_vec")]
    v: Vec<C64>,
    /// `Z_0..Z_n` as `(label, dim)`.
    memory: Layout,
    unitaries: Vec<ComplexMatrix>,
}

pub fn realization_memory_label(k: usize) -> String {
    format!("Z{k}~")
}

impl UnitaryRealization {
    /// Checks shapes, the dimension chain `z_{k-1} x_k = z_k y_k`, unitarity
    /// and the norm of `v`.
    pub fn new(rounds: RoundStructure, v: Vec<C64>, memory: Layout, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        let n = rounds.len();
        if memory.len() != n + 1 || unitaries.len() != n {
            return Err(Error::DimensionMismatch("realization needs n+1 memories and n unitaries".into()));
        }
        let z = memory.dims();
        let zl = memory.labels();
        if v.len() != z[0] {
            return Err(Error::DimensionMismatch("initial vector does not live on Z_0".into()));
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("initial vector has norm {norm}")));
        }
        for (k, (u, r)) in unitaries.iter().zip(rounds.rounds()).enumerate() {
            let rows = Layout::new([(r.y_label.clone(), r.y_dim), (zl[k + 1].to_string(), z[k + 1])])?;
            let cols = Layout::new([(zl[k].to_string(), z[k]), (r.x_label.clone(), r.x_dim)])?;
            if u.row_layout() != &rows || u.col_layout() != &cols {
                return Err(Error::LayoutMismatch(format!(
                    "U_{} is {} x {}, expected {rows} x {cols}",
                    k + 1,
                    u.row_layout(),
                    u.col_layout()
                )));
            }
            let g = u.adjoint().matmul(u)?;
            let dev = g.sub(&Matrix::identity(g.row_layout()))?.max_abs();
            if dev > UNITARITY_TOL {
                return Err(Error::NotOrthonormal(dev));
            }
        }
        Ok(UnitaryRealization { rounds, v, memory, unitaries })
    }

    pub fn rounds(&self) -> &RoundStructure {
        &self.rounds
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn memory(&self) -> &Layout {
        &self.memory
    }

    pub fn memory_dims(&self) -> Vec<usize> {
        self.memory.dims()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// Same unitaries with a different initial memory vector.
    pub fn with_initial(&self, v: Vec<C64>) -> Result<Self> {
        Self::new(self.rounds.clone(), v, self.memory.clone(), self.unitaries.clone())
    }

    /// The realization of the time-reversed interaction: round `j` applies
    /// `U_{n+1-j}ᵀ` as a map `(Z_k, Y_k) → (X_k, Z_{k-1})`, starting from `w`
    /// on `Z_n` and discarding `Z_0`.
    pub fn transposed(&self, w: Vec<C64>) -> Result<Self> {
        let zl = self.memory.labels();
        let n = self.rounds.len();
        let mut us = Vec::with_capacity(n);
        for k in (1..=n).rev() {
            let r = &self.rounds.rounds()[k - 1];
            let t = self.unitaries[k - 1].transpose();
            us.push(t.permute(&[r.x_label.as_str(), zl[k - 1]], &[zl[k], r.y_label.as_str()])?);
        }
        Self::new(self.rounds.reversed(), w, self.memory.reversed(), us)
    }

    /// The network matrix with the initial memory left open: rows
    /// `(Y_1..Y_n, Z_n)`, columns `(Z_0 source, X_1..X_n)`.
    pub fn open_network(&self) -> Result<ComplexMatrix> {
        let z0 = self.memory.factors()[0].clone();
        let src = Layout::single("src~", z0.dim)?;
        let init = Matrix::identity(&Layout::single(z0.label.clone(), z0.dim)?).with_layouts(
            Layout::single(z0.label, z0.dim)?,
            src,
        )?;
        run_network(init, &self.unitaries)
    }
}

/// The strategy implemented by a realization. The result always satisfies
/// the strategy constraints; they are re-checked here.
pub fn recompose_realization(r: &UnitaryRealization) -> Result<StrategyOperator> {
    let z0 = &r.memory.factors()[0];
    let init = Matrix::column(Layout::single(z0.label.clone(), z0.dim)?, r.v.clone())?;
    let m = run_network(init, &r.unitaries)?;
    let j = choi_from_network(&m, &r.rounds)?;
    validate_strategy(&j, &r.rounds)
}

/// Builds a realization with memory `z_k = (Πy)·(Π_{i>k} y_i)·(Π_{i≤k} x_i)`.
pub fn unitary_realization(s: &StrategyOperator) -> Result<UnitaryRealization> {
    let rounds = s.rounds().clone();
    let n = rounds.len();
    if s.hierarchy().len() + 1 != n {
        return Err(Error::MissingHierarchy);
    }
    let rs = rounds.rounds();
    let p = rounds.y_total();
    let zdims: Vec<usize> = (0..=n)
        .map(|k| {
            let later: usize = rs[k..].iter().map(|r| r.y_dim).product();
            let earlier: usize = rs[..k].iter().map(|r| r.x_dim).product();
            p * later * earlier
        })
        .collect();
    let memory = Layout::new((0..=n).map(|k| (realization_memory_label(k), zdims[k])))?;
    let zl: Vec<String> = memory.labels().iter().map(|s| s.to_string()).collect();

    let mut v = vec![Complex::new(0.0, 0.0); zdims[0]];
    v[0] = Complex::new(1.0, 0.0);

    let mut prev = Hermitian::<f64>::identity(&Layout::scalar());
    let mut unitaries = Vec::with_capacity(n);
    for k in 1..=n {
        let r = &rs[k - 1];
        let (xk, yk) = (r.x_dim, r.y_dim);
        let cur = s.marginal(k);
        let root = matrix_sqrt_psd(cur)?;
        let dk = cur.dim();
        let xs: usize = rs[..k].iter().map(|r| r.x_dim).product();
        let (zin, zout) = (zdims[k - 1], zdims[k]);
        let ndim = zin * xk;

        let eig = eig_hermitian(&prev)?;
        let top = eig.values.first().copied().unwrap_or(0.0);
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for (i, &mu) in eig.values.iter().enumerate() {
            if mu <= REALIZATION_RANK_TOL * top || mu <= 0.0 {
                break;
            }
            let phi = eig.vector(i);
            let inv_sqrt = 1.0 / mu.sqrt();
            for a in 0..xk {
                let mut vin = vec![Complex::new(0.0, 0.0); ndim];
                for (ri, c) in phi.iter().enumerate() {
                    vin[ri * xk + a] = c.conj();
                }
                ins.push(vin);
                // e = φ ⊗ |a> on (Y_<k, X_≤k); the partner of e inside
                // vec(√X_k) lives on (Y_k, R_k) ⊂ (Y_k, Z_k).
                let mut vout = vec![Complex::new(0.0, 0.0); yk * zout];
                for (pi, c) in phi.iter().enumerate() {
                    if *c == Complex::new(0.0, 0.0) {
                        continue;
                    }
                    let ec = c.conj() * inv_sqrt;
                    let (ypi, xpi) = (pi / (xs / xk), pi % (xs / xk));
                    let xfull = xpi * xk + a;
                    for b in 0..yk {
                        let row = (ypi * yk + b) * xs + xfull;
                        for rr in 0..dk {
                            vout[b * zout + rr] += ec * root.get(row, rr);
                        }
                    }
                }
                outs.push(vout);
            }
        }
        orthonormalize(&mut outs)?;

        let cols_layout = Layout::new([(zl[k - 1].clone(), zin), (r.x_label.clone(), xk)])?;
        let rows_layout = Layout::new([(r.y_label.clone(), yk), (zl[k].clone(), zout)])?;
        let basis = Layout::single("basis~", ins.len())?;
        let q_in = complete_isometry(&columns(&ins, cols_layout.clone(), basis.clone())?)?;
        let q_out = complete_isometry(&columns(&outs, rows_layout.clone(), basis)?)?;
        let u = q_out
            .with_layouts(rows_layout.clone(), Layout::single("basis~", ndim)?)?
            .matmul(&q_in.adjoint().with_layouts(Layout::single("basis~", ndim)?, cols_layout)?)?;
        unitaries.push(u);
        prev = cur.clone();
    }
    UnitaryRealization::new(rounds, v, memory, unitaries)
}

fn columns(vectors: &[Vec<C64>], rows: Layout, cols: Layout) -> Result<ComplexMatrix> {
    let k = vectors.len();
    Ok(Matrix::from_fn(rows, cols, |r, c| if c < k { vectors[c][r] } else { Complex::new(0.0, 0.0) }))
}
