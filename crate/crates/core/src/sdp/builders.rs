//! The strategy optimization `max ⟨H, X⟩ over X ∈ S_n` and its dual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::min_eigenvalue;
use crate::matrix::Hermitian;
use crate::sdp::{factor_map, identity_op, solve, Block, SdpProblem, SdpSolution, SolverOptions, Term};
use crate::strategies::{validate_strategy_with_tol, RoundStructure, StrategyOperator, FEASIBILITY_TOL};
use crate::HermitianOperator;

fn on_layout(h: &HermitianOperator, layout: &Layout) -> Result<HermitianOperator> {
    if h.layout() == layout {
        return Ok(h.clone());
    }
    h.permute_factors(&layout.labels())
        .map_err(|_| Error::LayoutMismatch(format!("objective on {} but rounds need {layout}", h.layout())))
}

fn terms(block: usize, weight: f64, ops: Vec<crate::sdp::SparseOp>) -> impl Iterator<Item = Term> {
    ops.into_iter().map(move |op| Term { block, weight, op })
}

/// `(Y_1..Y_{k-1}, X_1..X_k)`, the space of the `k`-th marginal constraint.
fn constraint_layout(rounds: &RoundStructure, k: usize) -> Result<Layout> {
    let r = &rounds.rounds()[k - 1];
    rounds.prefix_layout(k)?.without(&[r.y_label.as_str()])
}

/// Blocks `X_1..X_n` on `(Y_≤k, X_≤k)` with `Tr_{Y_1} X_1 = I`,
/// `Tr_{Y_k} X_k = X_{k-1} ⊗ I_{X_k}` and objective `⟨H, X_n⟩`.
pub fn build_strategy_primal(h: &HermitianOperator, rounds: &RoundStructure) -> Result<SdpProblem> {
    let n = rounds.len();
    let h = on_layout(h, &rounds.layout()?)?;
    let blocks = (1..=n)
        .map(|k| Ok(Block { label: format!("X{k}"), layout: rounds.prefix_layout(k)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut p = SdpProblem::new(blocks);
    p.set_objective(n - 1, h)?;
    for k in 1..=n {
        let r = &rounds.rounds()[k - 1];
        let target = constraint_layout(rounds, k)?;
        let order = target.labels();
        let mut ts: Vec<Term> =
            terms(k - 1, 1.0, factor_map(&rounds.prefix_layout(k)?, &[r.y_label.as_str()], &Layout::scalar(), &order)?)
                .collect();
        let rhs = if k == 1 {
            Hermitian::identity(&target)
        } else {
            let fresh = Layout::single(r.x_label.clone(), r.x_dim)?;
            ts.extend(terms(k - 2, -1.0, factor_map(&rounds.prefix_layout(k - 1)?, &[], &fresh, &order)?));
            Hermitian::zeros(&target)
        };
        p.add_constraint(format!("marginal{k}"), ts, rhs)?;
    }
    Ok(p)
}

/// The dual `min Tr Y_1` subject to `Y_n ⊗ I_{Y_n} ⪰ H` and
/// `Y_k ⊗ I_{Y_k} ⪰ Tr_{X_{k+1}} Y_{k+1}`, written for the solver as a
/// maximization over PSD blocks.
///
/// With `c = max(0, −λ_min(H))` every feasible `Y_k` satisfies
/// `Y_k + c·Π_{i>k} x_i · I ⪰ 0`, so the shifted variables are blocks
/// `Y'_k` and the inequalities get slack blocks `S_k`. The program
/// maximizes `−Tr Y'_1 + c·Πx`; its optimum is minus the dual optimum.
pub fn build_strategy_dual(h: &HermitianOperator, rounds: &RoundStructure) -> Result<SdpProblem> {
    let n = rounds.len();
    let full = rounds.layout()?;
    let h = on_layout(h, &full)?;
    let c = (-min_eigenvalue(&h)?).max(0.0);
    let mut blocks = vec![];
    for k in 1..=n {
        blocks.push(Block { label: format!("Y{k}"), layout: constraint_layout(rounds, k)? });
    }
    for k in 1..=n {
        blocks.push(Block { label: format!("S{k}"), layout: rounds.prefix_layout(k)? });
    }
    let mut p = SdpProblem::new(blocks);
    p.set_objective(0, Hermitian::identity(&constraint_layout(rounds, 1)?).scale(-1.0))?;
    p.offset = c * rounds.x_total() as f64;
    for k in 1..=n {
        let r = &rounds.rounds()[k - 1];
        let space = rounds.prefix_layout(k)?;
        let order = space.labels();
        let fresh = Layout::single(r.y_label.clone(), r.y_dim)?;
        let mut ts: Vec<Term> = terms(k - 1, 1.0, factor_map(&constraint_layout(rounds, k)?, &[], &fresh, &order)?).collect();
        ts.push(Term { block: n + k - 1, weight: -1.0, op: identity_op(space.total_dim()) });
        let rhs = if k == n {
            h.add(&Hermitian::identity(&full).scale(c))?
        } else {
            let next = &rounds.rounds()[k];
            ts.extend(terms(
                k,
                -1.0,
                factor_map(&constraint_layout(rounds, k + 1)?, &[next.x_label.as_str()], &Layout::scalar(), &order)?,
            ));
            Hermitian::zeros(&space)
        };
        p.add_constraint(format!("dominate{k}"), ts, rhs)?;
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyCertificate {
    /// Multipliers `Y_1..Y_n` of the marginal constraints.
    pub multipliers: Vec<HermitianOperator>,
    pub dual_value: f64,
    /// `dual_value − value`; nonnegative up to round-off.
    pub weak_duality_margin: f64,
}

#[derive(Clone, Debug)]
pub struct StrategyOptimum {
    pub value: f64,
    pub optimizer: StrategyOperator,
    pub certificate: StrategyCertificate,
    pub solution: SdpSolution,
}

/// Solves the primal program and validates the optimizer as a strategy.
pub fn optimal_strategy_value(h: &HermitianOperator, rounds: &RoundStructure, opts: &SolverOptions) -> Result<StrategyOptimum> {
    let p = build_strategy_primal(h, rounds)?;
    let sol = solve(&p, opts)?.require_optimal()?;
    let n = rounds.len();
    let optimizer = validate_strategy_with_tol(&sol.primal_blocks[n - 1], rounds, FEASIBILITY_TOL)?;
    let certificate = StrategyCertificate {
        multipliers: sol.dual_multipliers.clone(),
        dual_value: sol.dual_value,
        weak_duality_margin: sol.dual_value - sol.primal_value,
    };
    Ok(StrategyOptimum { value: sol.primal_value, optimizer, certificate, solution: sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{identity_channel, random_channel};
    use crate::matrix::vec_identity;
    use crate::random::{random_hermitian, trial_rng};
    use crate::strategies::{random_strategy, strategy_from_channels, strategy_value};

    fn one_round(x: usize, y: usize) -> RoundStructure {
        RoundStructure::from_dims(&[(x, y)]).unwrap()
    }

    #[test]
    fn trace_proportional_objective() {
        let rounds = one_round(2, 3);
        let h = Hermitian::identity(&rounds.layout().unwrap()).scale(1.0 / 6.0);
        let opt = optimal_strategy_value(&h, &rounds, &SolverOptions::default()).unwrap();
        assert!((opt.value - 1.0 / 3.0).abs() < 1e-8);
    }

    /// `H = J(id)/d`: the identity channel gives `⟨J, J⟩/d = d`, and no
    /// channel does better since `⟨J(id), J(Φ)⟩ = Σ_ab ⟨a|Φ(|a⟩⟨b|)|b⟩ ≤ d²`.
    #[test]
    fn aligned_with_identity_channel() {
        for d in [2usize, 3] {
            let rounds = RoundStructure::new([("X1", d, "Y1", d)]).unwrap();
            let lay = rounds.layout().unwrap();
            let j = Hermitian::projector(&vec_identity::<f64>(d), &lay).unwrap().scale(1.0 / d as f64);
            let opt = optimal_strategy_value(&j, &rounds, &SolverOptions::default()).unwrap();
            assert!((opt.value - d as f64).abs() < 1e-7, "{}", opt.value);
            let id = identity_channel(&Layout::single("X1", d).unwrap()).unwrap();
            let idj = id.choi().relabel(&[("X1", "Y1"), ("X1_in", "X1")]).unwrap();
            assert!((idj.inner_real(&j).unwrap() - d as f64).abs() < 1e-12);
            // random channels never beat it
            for t in 0..20 {
                let ch = random_channel(
                    &Layout::single("X1", d).unwrap(),
                    &Layout::single("Y1", d).unwrap(),
                    2,
                    &mut trial_rng(4, t),
                )
                .unwrap();
                let x = strategy_from_channels(&[ch], &rounds).unwrap();
                assert!(strategy_value(&x, &j).unwrap() <= opt.value + 1e-8);
            }
        }
    }

    #[test]
    fn strong_duality_two_rounds() {
        let rounds = RoundStructure::from_dims(&[(2, 2), (2, 2)]).unwrap();
        for t in 0..3 {
            let h = random_hermitian(&rounds.layout().unwrap(), &mut trial_rng(5, t));
            let opts = SolverOptions::default();
            let primal = optimal_strategy_value(&h, &rounds, &opts).unwrap();
            let dual = solve(&build_strategy_dual(&h, &rounds).unwrap(), &opts).unwrap().require_optimal().unwrap();
            let dual_opt = -dual.primal_value;
            assert!((dual_opt - primal.value).abs() < 1e-6, "{dual_opt} vs {}", primal.value);
            assert!(primal.certificate.weak_duality_margin > -1e-8);
            // dual certificate from the primal solve pairs to the same value
            let y1 = &primal.certificate.multipliers[0];
            assert!((y1.trace_real() - primal.value).abs() < 1e-6);
            // and no random strategy beats the optimum
            for s in 0..10 {
                let x = random_strategy(&rounds, &[2], &mut trial_rng(6, s)).unwrap();
                assert!(strategy_value(&x, &h).unwrap() <= primal.value + 1e-8);
            }
        }
    }

    #[test]
    fn nonpositive_objective_dual() {
        let rounds = one_round(2, 2);
        let zero = Hermitian::zeros(&rounds.layout().unwrap());
        let sol = solve(&build_strategy_dual(&zero, &rounds).unwrap(), &SolverOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.primal_value.abs() < 1e-8);
    }

    #[test]
    fn feasible_blocks_are_strategies() {
        let rounds = RoundStructure::from_dims(&[(2, 1), (1, 2)]).unwrap();
        let h = random_hermitian(&rounds.layout().unwrap(), &mut trial_rng(8, 0));
        let opt = optimal_strategy_value(&h, &rounds, &SolverOptions::default()).unwrap();
        assert!(opt.optimizer.max_residual() < 1e-8);
    }
}
