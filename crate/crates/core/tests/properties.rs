use combforge::channels::{random_channel, transpose_channel};
use combforge::entropy::{d_max, d_min};
use combforge::io::{from_json, to_json};
use combforge::random::{random_density, random_hermitian, random_pure_state, trial_rng};
use combforge::reversal::{build_a, time_reversed};
use combforge::sdp::{optimal_strategy_value, SolverOptions};
use combforge::strategies::{
    random_strategy, random_strategy_channels, recompose_realization, strategy_from_channels, strategy_value,
    unitary_realization, validate_strategy, RoundStructure,
};
use combforge::{Hermitian, HermitianOperator, Layout, C64};
use proptest::prelude::*;

fn rounds_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = RoundStructure> {
    prop::collection::vec((1..=max_d, 1..=max_d), 1..=max_n).prop_map(|d| RoundStructure::from_dims(&d).unwrap())
}

fn memory(n: usize) -> Vec<usize> {
    vec![2; n - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn channel_composition_is_feasible(rounds in rounds_strategy(3, 2), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let phis = random_strategy_channels(&rounds, &memory(rounds.len()), &mut rng).unwrap();
        let x = strategy_from_channels(&phis, &rounds).unwrap();
        prop_assert!(x.max_residual() < 1e-9);
    }

    #[test]
    fn realization_recomposes(rounds in rounds_strategy(3, 2), seed in any::<u64>()) {
        let x = random_strategy(&rounds, &memory(rounds.len()), &mut trial_rng(seed, 0)).unwrap();
        let back = recompose_realization(&unitary_realization(&x).unwrap()).unwrap();
        let err = back.op().sub(x.op()).unwrap().frobenius_norm() / x.op().frobenius_norm();
        prop_assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn transposed_realization_is_a_strategy_for_any_w(rounds in rounds_strategy(2, 2), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let x = random_strategy(&rounds, &memory(rounds.len()), &mut rng).unwrap();
        let r = unitary_realization(&x).unwrap();
        let zn = r.memory().factors().last().unwrap().dim;
        let w = random_pure_state(&Layout::single("w", zn).unwrap(), &mut rng);
        let y = recompose_realization(&r.transposed(w).unwrap()).unwrap();
        prop_assert!(y.max_residual() < 1e-8);
        prop_assert_eq!(y.rounds(), &rounds.reversed());
    }

    #[test]
    fn pairing_equals_squared_norm(rounds in rounds_strategy(2, 3), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let x = random_strategy(&rounds, &memory(rounds.len()), &mut rng).unwrap();
        let r = unitary_realization(&x).unwrap();
        let layout = rounds.layout().unwrap();
        let u = random_pure_state(&layout, &mut rng);
        let pairing = recompose_realization(&r).unwrap().op().inner_real(&Hermitian::projector(&u, &layout).unwrap()).unwrap();
        let av = build_a(&r, &u).unwrap().mul_vec(r.v()).unwrap();
        let norm: f64 = av.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((pairing - norm).abs() < 1e-10, "{pairing} vs {norm}");
    }

    #[test]
    fn time_reversal_is_an_involution(rounds in rounds_strategy(3, 2), seed in any::<u64>()) {
        let h = random_hermitian(&rounds.layout().unwrap(), &mut trial_rng(seed, 0));
        let back = time_reversed(&time_reversed(&h, &rounds).unwrap(), &rounds.reversed()).unwrap();
        prop_assert!(back.sub(&h).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn max_relative_entropy_dominates_min(d in 2usize..=4, seed in any::<u64>()) {
        let l = Layout::single("A", d).unwrap();
        let mut rng = trial_rng(seed, 0);
        let p = random_density(&l, d, &mut rng).unwrap();
        let q = random_density(&l, d, &mut rng).unwrap();
        prop_assert!(d_max(&p, &q).unwrap() >= d_min(&p, &q).unwrap() - 1e-9);
    }

    #[test]
    fn double_transpose_restores_channel(din in 1usize..=3, dout in 1usize..=3, seed in any::<u64>()) {
        let c = random_channel(
            &Layout::single("A", din).unwrap(),
            &Layout::single("B", dout).unwrap(),
            din,
            &mut trial_rng(seed, 0),
        )
        .unwrap();
        let back = transpose_channel(&transpose_channel(&c).unwrap()).unwrap();
        prop_assert!(back.choi().sub(c.choi()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn hermitian_json_roundtrip_is_exact(d in 1usize..=4, seed in any::<u64>()) {
        let h = random_hermitian(&Layout::new([("A", d), ("B", 2)]).unwrap(), &mut trial_rng(seed, 0));
        let back: HermitianOperator = from_json(&to_json(&h).unwrap()).unwrap();
        prop_assert_eq!(back, h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Random strategies never beat the certified optimum, and the dual
    /// certificate is never below it.
    #[test]
    fn strategy_optimum_is_bounded_by_duality(rounds in rounds_strategy(2, 2), seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let h = random_hermitian(&rounds.layout().unwrap(), &mut rng);
        let opt = optimal_strategy_value(&h, &rounds, &SolverOptions::default()).unwrap();
        prop_assert!(opt.certificate.dual_value >= opt.value - 1e-9);
        prop_assert!(validate_strategy(opt.optimizer.op(), &rounds).is_ok());
        for _ in 0..5 {
            let x = random_strategy(&rounds, &memory(rounds.len()), &mut rng).unwrap();
            prop_assert!(strategy_value(&x, &h).unwrap() <= opt.certificate.dual_value + 1e-8);
        }
    }
}

#[test]
fn scalar_register_rounds_are_allowed() {
    let rounds = RoundStructure::from_dims(&[(1, 2), (2, 1)]).unwrap();
    let x = random_strategy(&rounds, &[2], &mut trial_rng(1, 0)).unwrap();
    assert!(x.max_residual() < 1e-9);
    let u: Vec<C64> = random_pure_state(&rounds.layout().unwrap(), &mut trial_rng(1, 1));
    assert_eq!(u.len(), 4);
}
