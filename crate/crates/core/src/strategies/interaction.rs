//! Interaction between a strategy and a measuring co-strategy.
//!
//! Bob's channels are `Ψ_1: · → (X_1, W_1)`, `Ψ_k: (W_{k-1}, Y_{k-1}) →
//! (X_k, W_k)` and `Ψ_{n+1}: (W_n, Y_n) → W_{n+1}`, followed by an effect
//! `0 ≤ Q ≤ I` on `W_{n+1}`. Factors are matched by label throughout.

use num_complex::Complex;

use crate::channels::{stinespring_from_choi, Channel, ENV_LABEL};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::{eig_hermitian, matrix_sqrt_psd};
use crate::matrix::{Hermitian, Matrix};
use crate::strategies::{choi_from_network, run_network, RoundStructure};
use crate::HermitianOperator;

const EFFECT_TOL: f64 = 1e-10;

fn check_effect(q: &HermitianOperator) -> Result<()> {
    let eig = eig_hermitian(q)?;
    let hi = eig.values.first().copied().unwrap_or(0.0);
    let lo = eig.values.last().copied().unwrap_or(0.0);
    if lo < -EFFECT_TOL {
        return Err(Error::InvalidEffect(lo));
    }
    if hi > 1.0 + EFFECT_TOL {
        return Err(Error::InvalidEffect(hi));
    }
    Ok(())
}

fn trivial_state(layouts: &[&Layout]) -> Result<HermitianOperator> {
    let mut factors = vec![];
    for l in layouts {
        if l.total_dim() != 1 {
            return Err(Error::DimensionMismatch(format!("initial registers {l} must be trivial")));
        }
        factors.extend(l.factors().iter().cloned());
    }
    let layout = Layout::from_factors(factors)?;
    Ok(Hermitian::identity(&layout))
}

fn alice_initial_memory(phi: &Channel, rounds: &RoundStructure) -> Result<Layout> {
    phi.input_layout().without(&[rounds.rounds()[0].x_label.as_str()])
}

/// Probability that Bob's final measurement accepts, by direct sequential
/// evolution of the joint state.
pub fn simulate_interaction(
    alice: &[Channel],
    bob: &[Channel],
    effect: &HermitianOperator,
    rounds: &RoundStructure,
) -> Result<f64> {
    let n = rounds.len();
    if alice.len() != n || bob.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{n} rounds need {n} strategy channels and {} co-strategy channels",
            n + 1
        )));
    }
    check_effect(effect)?;
    let mem0 = alice_initial_memory(&alice[0], rounds)?;
    let mut rho = trivial_state(&[bob[0].input_layout(), &mem0])?;
    for k in 0..n {
        rho = bob[k].apply_to_subsystems(&rho)?;
        rho = alice[k].apply_to_subsystems(&rho)?;
    }
    rho = bob[n].apply_to_subsystems(&rho)?;
    let keep = effect.layout().labels();
    let rest: Vec<&str> = rho.layout().labels().into_iter().filter(|l| !keep.contains(l)).collect();
    let marginal = rho.partial_trace(&rest)?.permute_factors(&keep)?;
    marginal.inner_real(effect)
}

/// The operator `P` on `(Y_1..Y_n, X_1..X_n)` with `⟨P, X⟩` equal to the
/// acceptance probability against any strategy `X`.
///
/// Bob's network is run on reference halves of `vec(I_{Y_k})`, the effect is
/// absorbed as `√Q`, and the resulting operator is conjugated: pairing with
/// `X` links every strategy factor to Bob's matching factor, which under the
/// row-major `vec` convention is a transpose of one side.
pub fn co_strategy_functional(bob: &[Channel], effect: &HermitianOperator, rounds: &RoundStructure) -> Result<HermitianOperator> {
    let n = rounds.len();
    if bob.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!("{n} rounds need {} co-strategy channels", n + 1)));
    }
    check_effect(effect)?;
    let mut steps = Vec::with_capacity(n + 1);
    for (k, psi) in bob.iter().enumerate() {
        let v = stinespring_from_choi(psi)?;
        let env = format!("co{ENV_LABEL}{}", k + 1);
        let rows = v.row_layout().relabel(&[(ENV_LABEL, env.as_str())])?;
        let cols = v.col_layout().clone();
        steps.push(v.with_layouts(rows, cols)?);
    }
    let init = Matrix::column(bob[0].input_layout().clone(), vec![Complex::new(1.0, 0.0)])?;
    let m = run_network(init, &steps)?;
    let root = matrix_sqrt_psd(effect)?;
    let m = m.apply_left_on(root.as_matrix())?;
    let swapped = rounds.reversed();
    let b = choi_from_network(&m, &swapped)?;
    let target = rounds.layout()?;
    Ok(b.permute_factors(&target.labels())?.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_from_kraus, identity_channel, KrausSet};
    use crate::matrix::vec_identity;

    fn lay(spec: &[(&str, usize)]) -> Layout {
        Layout::new(spec.iter().map(|(l, d)| (l.to_string(), *d))).unwrap()
    }

    /// Bob prepares vec(I)/√2 on (X1, W1), sends X1, gets Y1 back and keeps
    /// (W1, Y1) as W2; the effect projects onto the entangled vector.
    fn entangled_bob() -> (Vec<Channel>, HermitianOperator) {
        let v: Vec<_> = vec_identity::<f64>(2).into_iter().map(|z| z / 2f64.sqrt()).collect();
        let prep = Matrix::from_vec(lay(&[("X1", 2), ("W1", 2)]), lay(&[]), v.clone()).unwrap();
        let psi1 = choi_from_kraus(&KrausSet::new(vec![prep]).unwrap()).unwrap();
        let psi2 = identity_channel(&lay(&[("W1", 2), ("Y1", 2)])).unwrap();
        let q = Hermitian::projector(&v, &lay(&[("W1", 2), ("Y1", 2)])).unwrap();
        (vec![psi1, psi2], q)
    }

    #[test]
    fn entangled_test_accepts_identity_strategy() {
        let rounds = RoundStructure::new([("X1", 2, "Y1", 2)]).unwrap();
        let (bob, q) = entangled_bob();
        let u = Matrix::<f64>::identity(&lay(&[("X1", 2)])).with_layouts(lay(&[("Y1", 2)]), lay(&[("X1", 2)])).unwrap();
        let alice = vec![choi_from_kraus(&KrausSet::new(vec![u]).unwrap()).unwrap()];
        let p = simulate_interaction(&alice, &bob, &q, &rounds).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let pm = co_strategy_functional(&bob, &q, &rounds).unwrap();
        let x = crate::strategies::strategy_from_channels(&alice, &rounds).unwrap();
        assert!((x.op().inner_real(&pm).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_effects() {
        let rounds = RoundStructure::new([("X1", 2, "Y1", 2)]).unwrap();
        let (bob, q) = entangled_bob();
        let alice = vec![crate::channels::depolarizing_channel(&lay(&[("X1", 2)])).unwrap()];
        let alice = vec![Channel::from_choi(
            alice[0].choi().relabel(&[("X1", "Y1")]).unwrap(),
            lay(&[("X1", 2)]),
            lay(&[("Y1", 2)]),
            crate::channels::ChannelKind::Channel,
        )
        .unwrap()];
        let one = Hermitian::identity(q.layout());
        assert!((simulate_interaction(&alice, &bob, &one, &rounds).unwrap() - 1.0).abs() < 1e-12);
        let zero = Hermitian::zeros(q.layout());
        assert!(simulate_interaction(&alice, &bob, &zero, &rounds).unwrap().abs() < 1e-12);
        assert!(matches!(
            simulate_interaction(&alice, &bob, &one.scale(2.0), &rounds),
            Err(Error::InvalidEffect(_))
        ));
    }
}
