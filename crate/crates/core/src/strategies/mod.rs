//! Strategy operators (quantum combs).
//!
//! An `n`-round strategy lives on `(Y_1..Y_n, X_1..X_n)` and satisfies
//! `Tr_{Y_k} X_k = X_{k-1} ⊗ I_{X_k}` with `Tr_{Y_1} X_1 = I_{X_1}`, where
//! `X_k` is the marginal on the first `k` rounds.

mod interaction;
mod network;
mod realization;

pub use interaction::{co_strategy_functional, simulate_interaction};
pub use network::{choi_from_network, run_network};
pub use realization::{recompose_realization, unitary_realization, UnitaryRealization};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{random_channel, stinespring_from_choi, Channel, ENV_LABEL};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::{check_psd, eig_hermitian};
use crate::matrix::{Hermitian, Matrix};
use crate::HermitianOperator;

/// Default relative tolerance for the marginal constraints.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(String, usize, String, usize)", into = "(String, usize, String, usize)")]
pub struct Round {
    pub x_label: String,
    pub x_dim: usize,
    pub y_label: String,
    pub y_dim: usize,
}

impl From<(String, usize, String, usize)> for Round {
    fn from((x_label, x_dim, y_label, y_dim): (String, usize, String, usize)) -> Self {
        Round { x_label, x_dim, y_label, y_dim }
    }
}

impl From<Round> for (String, usize, String, usize) {
    fn from(r: Round) -> Self {
        (r.x_label, r.x_dim, r.y_label, r.y_dim)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Round>", into = "Vec<Round>")]
pub struct RoundStructure {
    rounds: Vec<Round>,
}

impl TryFrom<Vec<Round>> for RoundStructure {
    type Error = Error;

    fn try_from(rounds: Vec<Round>) -> Result<Self> {
        RoundStructure::from_rounds(rounds)
    }
}

impl From<RoundStructure> for Vec<Round> {
    fn from(r: RoundStructure) -> Self {
        r.rounds
    }
}

impl RoundStructure {
    pub fn from_rounds(rounds: Vec<Round>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::InvalidInput("a strategy needs at least one round".into()));
        }
        let s = RoundStructure { rounds };
        s.layout()?;
        Ok(s)
    }

    /// Rounds from `(x_label, x_dim, y_label, y_dim)` tuples.
    pub fn new<S: Into<String>>(rounds: impl IntoIterator<Item = (S, usize, S, usize)>) -> Result<Self> {
        Self::from_rounds(
            rounds
                .into_iter()
                .map(|(xl, xd, yl, yd)| Round { x_label: xl.into(), x_dim: xd, y_label: yl.into(), y_dim: yd })
                .collect(),
        )
    }

    /// Rounds labeled `X1, Y1, X2, Y2, …` with the given dimensions.
    pub fn from_dims(dims: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            dims.iter()
                .enumerate()
                .map(|(i, &(x, y))| (format!("X{}", i + 1), x, format!("Y{}", i + 1), y)),
        )
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn x_labels(&self) -> Vec<&str> {
        self.rounds.iter().map(|r| r.x_label.as_str()).collect()
    }

    pub fn y_labels(&self) -> Vec<&str> {
        self.rounds.iter().map(|r| r.y_label.as_str()).collect()
    }

    pub fn x_total(&self) -> usize {
        self.rounds.iter().map(|r| r.x_dim).product()
    }

    pub fn y_total(&self) -> usize {
        self.rounds.iter().map(|r| r.y_dim).product()
    }

    /// `(Y_1..Y_k, X_1..X_k)`.
    pub fn prefix_layout(&self, k: usize) -> Result<Layout> {
        let rs = &self.rounds[..k];
        let ys = rs.iter().map(|r| (r.y_label.clone(), r.y_dim));
        let xs = rs.iter().map(|r| (r.x_label.clone(), r.x_dim));
        Layout::new(ys.chain(xs))
    }

    /// `(Y_1..Y_n, X_1..X_n)`.
    pub fn layout(&self) -> Result<Layout> {
        self.prefix_layout(self.rounds.len())
    }

    /// Round `j` of the reversal reads `Y_{n+1-j}` and answers on
    /// `X_{n+1-j}`; its layout is the factor reversal of this one.
    pub fn reversed(&self) -> RoundStructure {
        RoundStructure {
            rounds: self
                .rounds
                .iter()
                .rev()
                .map(|r| Round {
                    x_label: r.y_label.clone(),
                    x_dim: r.y_dim,
                    y_label: r.x_label.clone(),
                    y_dim: r.x_dim,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyOperator {
    op: HermitianOperator,
    rounds: RoundStructure,
    /// `X_1..X_{n-1}`.
    hierarchy: Vec<HermitianOperator>,
    residuals: Vec<f64>,
}

impl StrategyOperator {
    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn rounds(&self) -> &RoundStructure {
        &self.rounds
    }

    pub fn hierarchy(&self) -> &[HermitianOperator] {
        &self.hierarchy
    }

    /// The marginal `X_k` for `k = 1..n` (`X_n` is the operator itself).
    pub fn marginal(&self, k: usize) -> &HermitianOperator {
        if k == self.rounds.len() {
            &self.op
        } else {
            &self.hierarchy[k - 1]
        }
    }

    /// Relative constraint residuals, indexed by round (`[0]` is round 1).
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }
}

/// Marginals `X_1..X_n` (recovered as `X_{k-1} = Tr_{Y_k,X_k} X_k / x_k`) and
/// the relative residual of each round's constraint.
pub fn strategy_residuals(op: &HermitianOperator, rounds: &RoundStructure) -> Result<(Vec<HermitianOperator>, Vec<f64>)> {
    let n = rounds.len();
    let mut marginals = vec![op.clone()];
    let mut residuals = vec![0.0; n];
    for k in (1..=n).rev() {
        let r = &rounds.rounds()[k - 1];
        let xk = marginals.last().expect("nonempty").clone();
        let scale = xk.frobenius_norm().max(f64::MIN_POSITIVE);
        let traced = xk.partial_trace(&[r.y_label.as_str()])?;
        let expected = if k > 1 {
            let prev = traced.partial_trace(&[r.x_label.as_str()])?.scale(1.0 / r.x_dim as f64);
            let e = prev.tensor(&Hermitian::identity(&Layout::single(r.x_label.clone(), r.x_dim)?))?;
            marginals.push(prev);
            e
        } else {
            Hermitian::identity(traced.layout())
        };
        residuals[k - 1] = traced.sub(&expected)?.frobenius_norm() / scale;
    }
    marginals.reverse();
    Ok((marginals, residuals))
}

/// Checks positivity and the marginal hierarchy at the default tolerance.
pub fn validate_strategy(op: &HermitianOperator, rounds: &RoundStructure) -> Result<StrategyOperator> {
    validate_strategy_with_tol(op, rounds, FEASIBILITY_TOL)
}

pub fn validate_strategy_with_tol(op: &HermitianOperator, rounds: &RoundStructure, tol: f64) -> Result<StrategyOperator> {
    let layout = rounds.layout()?;
    let op = if op.layout() == &layout {
        op.clone()
    } else {
        op.permute_factors(&layout.labels())
            .map_err(|_| Error::LayoutMismatch(format!("operator on {} but rounds need {}", op.layout(), layout)))?
    };
    if op.layout() != &layout {
        return Err(Error::LayoutMismatch(format!("operator on {} but rounds need {}", op.layout(), layout)));
    }
    check_psd(&eig_hermitian(&op)?)?;
    let (mut marginals, residuals) = strategy_residuals(&op, rounds)?;
    for (k, &res) in residuals.iter().enumerate().rev() {
        if res > tol {
            return Err(Error::StrategyConstraint { round: k + 1, residual: res });
        }
    }
    marginals.pop();
    Ok(StrategyOperator { op, rounds: rounds.clone(), hierarchy: marginals, residuals })
}

/// `⟨H, X_n⟩`.
pub fn strategy_value(s: &StrategyOperator, h: &HermitianOperator) -> Result<f64> {
    let h = if h.layout() == s.op.layout() { h.clone() } else { h.permute_factors(&s.op.layout().labels())? };
    s.op.inner_real(&h)
}

/// Memory labels used by [`random_strategy`].
pub fn memory_label(k: usize) -> String {
    format!("mem{k}")
}

/// Splits a channel's factors into the round's own factor and memory.
fn memory_part(layout: &Layout, own: &str) -> Result<Layout> {
    if !layout.contains(own) {
        return Err(Error::DimensionMismatch(format!("channel layout {layout} lacks factor `{own}`")));
    }
    layout.without(&[own])
}

/// The strategy implemented by channels `Φ_k: (Z_{k-1}, X_k) → (Y_k, Z_k)`.
/// Every factor other than `X_k` (inputs) or `Y_k` (outputs) is memory; the
/// memory read by `Φ_k` must be the memory written by `Φ_{k-1}`, and the
/// first input memory and last output memory must be trivial.
pub fn strategy_from_channels(phis: &[Channel], rounds: &RoundStructure) -> Result<StrategyOperator> {
    let n = rounds.len();
    if phis.len() != n {
        return Err(Error::DimensionMismatch(format!("{} channels for {n} rounds", phis.len())));
    }
    let mut steps = Vec::with_capacity(n);
    let mut prev_mem: Option<Layout> = None;
    let mut init_layout = Layout::scalar();
    for (k, (phi, r)) in phis.iter().zip(rounds.rounds()).enumerate() {
        if phi.input_layout().dim_of(&r.x_label)? != r.x_dim || phi.output_layout().dim_of(&r.y_label)? != r.y_dim {
            return Err(Error::DimensionMismatch(format!("round {} dimensions", k + 1)));
        }
        let mem_in = memory_part(phi.input_layout(), &r.x_label)?;
        let mem_out = memory_part(phi.output_layout(), &r.y_label)?;
        match &prev_mem {
            None => {
                if mem_in.total_dim() != 1 {
                    return Err(Error::DimensionMismatch("first channel must have trivial input memory".into()));
                }
                init_layout = mem_in.clone();
            }
            Some(p) => {
                let mut a = p.factors().to_vec();
                let mut b = mem_in.factors().to_vec();
                a.sort_by(|x, y| x.label.cmp(&y.label));
                b.sort_by(|x, y| x.label.cmp(&y.label));
                if a != b {
                    return Err(Error::DimensionMismatch(format!("memory chain breaks at round {}: {p} vs {mem_in}", k + 1)));
                }
            }
        }
        if k + 1 == n && mem_out.total_dim() != 1 {
            return Err(Error::DimensionMismatch("last channel must have trivial output memory".into()));
        }
        prev_mem = Some(mem_out);
        let v = stinespring_from_choi(phi)?;
        let env = format!("{ENV_LABEL}{}", k + 1);
        let rows = v.row_layout().relabel(&[(ENV_LABEL, env.as_str())])?;
        let cols = v.col_layout().clone();
        steps.push(v.with_layouts(rows, cols)?);
    }
    let init = Matrix::column(init_layout, vec![num_complex::Complex::new(1.0, 0.0)])?;
    let m = run_network(init, &steps)?;
    let j = choi_from_network(&m, rounds)?;
    validate_strategy(&j, rounds)
}

/// Random channels `Φ_k` with memory dimensions `z_1..z_{n-1}` (labels
/// from [`memory_label`]).
pub fn random_strategy_channels<R: Rng + ?Sized>(
    rounds: &RoundStructure,
    memory_dims: &[usize],
    rng: &mut R,
) -> Result<Vec<Channel>> {
    let n = rounds.len();
    if memory_dims.len() + 1 != n {
        return Err(Error::InvalidInput(format!("{n} rounds need {} memory dimensions", n - 1)));
    }
    let mut out = Vec::with_capacity(n);
    for (k, r) in rounds.rounds().iter().enumerate() {
        let mut input = vec![];
        if k > 0 {
            input.push((memory_label(k), memory_dims[k - 1]));
        }
        input.push((r.x_label.clone(), r.x_dim));
        let mut output = vec![(r.y_label.clone(), r.y_dim)];
        if k + 1 < n {
            output.push((memory_label(k + 1), memory_dims[k]));
        }
        let input = Layout::new(input)?;
        let output = Layout::new(output)?;
        let env = input.total_dim().div_ceil(output.total_dim()).max(2);
        out.push(random_channel(&input, &output, env, rng)?);
    }
    Ok(out)
}

pub fn random_strategy<R: Rng + ?Sized>(rounds: &RoundStructure, memory_dims: &[usize], rng: &mut R) -> Result<StrategyOperator> {
    let phis = random_strategy_channels(rounds, memory_dims, rng)?;
    strategy_from_channels(&phis, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::identity_channel;
    use crate::random::trial_rng;

    #[test]
    fn identity_channel_is_a_one_round_strategy() {
        let rounds = RoundStructure::new([("X1", 2, "Y1", 2)]).unwrap();
        let id = identity_channel(&Layout::single("X1", 2).unwrap()).unwrap();
        let j = id.choi().relabel(&[("X1", "Y1"), ("X1_in", "X1")]).unwrap();
        let s = validate_strategy(&j, &rounds).unwrap();
        assert!(s.hierarchy().is_empty());
        assert!(matches!(
            validate_strategy(&j.scale(2.0), &rounds),
            Err(Error::StrategyConstraint { round: 1, .. })
        ));
    }

    #[test]
    fn reversed_rounds_layout_is_factor_reversal() {
        let rounds = RoundStructure::from_dims(&[(2, 3), (1, 2)]).unwrap();
        let rev = rounds.reversed();
        assert_eq!(rev.layout().unwrap(), rounds.layout().unwrap().reversed());
        assert_eq!(rev.reversed(), rounds);
    }

    #[test]
    fn random_strategies_validate() {
        let rounds = RoundStructure::from_dims(&[(2, 2), (2, 2)]).unwrap();
        let s = random_strategy(&rounds, &[2], &mut trial_rng(9, 0)).unwrap();
        assert!(s.max_residual() <= 1e-10, "{:?}", s.residuals());
        assert_eq!(s.hierarchy().len(), 1);
        assert!((s.op().trace_real() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn rounds_serde_shape() {
        let rounds = RoundStructure::from_dims(&[(2, 3)]).unwrap();
        assert_eq!(serde_json::to_string(&rounds).unwrap(), r#"[["X1",2,"Y1",3]]"#);
    }
}
