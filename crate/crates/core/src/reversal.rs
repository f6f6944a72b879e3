//! Time reversal of a strategy against a rank-one objective.
//!
//! For a realization `(v, U_1..U_n)` of `X` and a vector `u`, the operator
//! `A: Z_0 → Z_n` contracts the network with `ū` so that `⟨uu*, X⟩ = ‖Av‖²`.
//! Running the transposed unitaries backwards from a memory state `w` on
//! `Z_n` gives a strategy `Y` for the reversed interaction with
//! `⟨Wuu*W*, Y⟩ = ‖Aᵀw‖²`. Since `A*A` and `conj(A)Aᵀ` share their nonzero
//! spectrum, `w` can always match or beat the forward value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::eig_hermitian;
use crate::matrix::{Hermitian, Matrix};
use crate::sdp::{optimal_strategy_value, SdpSolution, SolverOptions};
use crate::strategies::{recompose_realization, RoundStructure, StrategyOperator, UnitaryRealization};
use crate::{ComplexMatrix, HermitianOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversalMode {
    /// `w` is a top eigenvector of `conj(A)Aᵀ`.
    Maximize,
    /// `w` interpolates the extremal eigenvectors to hit the forward value.
    Match,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversalResult {
    pub reversed: StrategyOperator,
    #[serde(with = "crate::io::exact_complex_vec")]
    pub w: Vec<C64>,
    pub forward_value: f64,
    pub reversed_value: f64,
    pub mode: ReversalMode,
    /// `|⟨uu*, X⟩ − ‖Av‖²|`.
    pub forward_bridge: f64,
    /// `|⟨Wuu*W*, Y⟩ − ‖Aᵀw‖²|`.
    pub reversed_bridge: f64,
}

fn check_vector(u: &[C64], rounds: &RoundStructure) -> Result<Layout> {
    let layout = rounds.layout()?;
    if u.len() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a layout of dimension {}",
            u.len(),
            layout.total_dim()
        )));
    }
    Ok(layout)
}

/// `W H W*`: the same operator with its factors in reversed order, which is
/// the layout of the reversed rounds.
pub fn time_reversed(h: &HermitianOperator, rounds: &RoundStructure) -> Result<HermitianOperator> {
    let target = rounds.reversed().layout()?;
    h.permute_factors(&target.labels())
}

/// `uu*` on the strategy layout.
pub fn rank_one(u: &[C64], rounds: &RoundStructure) -> Result<HermitianOperator> {
    let layout = check_vector(u, rounds)?;
    Hermitian::projector(u, &layout)
}

/// `A[z_n, z_0] = Σ_{y,x} ū(y,x) · N[(y, z_n), (z_0, x)]` where `N` is the
/// realization's network with `Z_0` left open.
pub fn build_a(r: &UnitaryRealization, u: &[C64]) -> Result<ComplexMatrix> {
    let rounds = r.rounds();
    check_vector(u, rounds)?;
    let mem = r.memory();
    let z0 = &mem.factors()[0];
    let zn = &mem.factors()[mem.len() - 1];
    let mut rows = rounds.y_labels();
    rows.push(zn.label.as_str());
    let mut cols = vec!["src~"];
    cols.extend(rounds.x_labels());
    let net = r.open_network()?.permute(&rows, &cols)?;
    let (px, py) = (rounds.x_total(), rounds.y_total());
    let mut a = Matrix::zeros(Layout::single(zn.label.clone(), zn.dim)?, Layout::single(z0.label.clone(), z0.dim)?);
    for y in 0..py {
        for x in 0..px {
            let cu = u[y * px + x].conj();
            if cu.norm_sqr() == 0.0 {
                continue;
            }
            for e in 0..zn.dim {
                for s in 0..z0.dim {
                    a.add_at(e, s, cu * net.get(y * zn.dim + e, s * px + x));
                }
            }
        }
    }
    Ok(a)
}

fn norm_sqr_of(m: &ComplexMatrix, v: &[C64]) -> Result<f64> {
    Ok(m.mul_vec(v)?.iter().map(|z| z.norm_sqr()).sum())
}

/// `conj(A) Aᵀ` on `Z_n`.
pub fn reversed_gram(a: &ComplexMatrix) -> Result<HermitianOperator> {
    Ok(Hermitian::symmetrized(a.conj().matmul(&a.transpose())?))
}

/// Picks the initial memory of the reversed realization; returns `w` and
/// `‖Aᵀw‖²`.
pub fn choose_w(a: &ComplexMatrix, target: f64, mode: ReversalMode) -> Result<(Vec<C64>, f64)> {
    let k = reversed_gram(a)?;
    let eig = eig_hermitian(&k)?;
    let hi = eig.values[0];
    let lo = *eig.values.last().expect("nonempty");
    let top = eig.vector(0);
    let w = match mode {
        ReversalMode::Maximize => top,
        ReversalMode::Match => {
            let tol = 1e-10 * hi.abs().max(1.0);
            if target > hi + tol || target < lo - tol {
                return Err(Error::MatchInfeasible { target, low: lo, high: hi });
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                top
            } else {
                let c2 = ((target - lo) / (hi - lo)).clamp(0.0, 1.0);
                let (c, s) = (c2.sqrt(), (1.0 - c2).sqrt());
                let bottom = eig.vector(eig.values.len() - 1);
                top.iter().zip(&bottom).map(|(t, b)| t * c + b * s).collect()
            }
        }
    };
    let value = norm_sqr_of(&a.transpose(), &w)?;
    Ok((w, value))
}

/// Builds the reversed strategy `Y` for objective `uu*` and checks both
/// values by direct pairing.
pub fn reverse_strategy(r: &UnitaryRealization, u: &[C64], mode: ReversalMode) -> Result<ReversalResult> {
    let rounds = r.rounds();
    if mode == ReversalMode::Match && rounds.y_total() > rounds.x_total() {
        return Err(Error::InvalidInput(format!(
            "matching needs Πy ≤ Πx, got {} > {}",
            rounds.y_total(),
            rounds.x_total()
        )));
    }
    let h = rank_one(u, rounds)?;
    let forward = recompose_realization(r)?;
    let forward_value = forward.op().inner_real(&h)?;
    let a = build_a(r, u)?;
    let av = norm_sqr_of(&a, r.v())?;
    let (w, predicted) = choose_w(&a, av, mode)?;
    let reversed = recompose_realization(&r.transposed(w.clone())?)?;
    let reversed_value = reversed.op().inner_real(&time_reversed(&h, rounds)?)?;
    Ok(ReversalResult {
        reversed,
        w,
        forward_value,
        reversed_value,
        mode,
        forward_bridge: (forward_value - av).abs(),
        reversed_bridge: (reversed_value - predicted).abs(),
    })
}

#[derive(Clone, Debug)]
pub struct OptimumPair {
    pub forward_opt: f64,
    pub reversed_opt: f64,
    pub forward_solution: SdpSolution,
    pub reversed_solution: SdpSolution,
}

impl OptimumPair {
    pub fn difference(&self) -> f64 {
        (self.forward_opt - self.reversed_opt).abs()
    }
}

/// Optimizes `⟨H, X⟩` over strategies for `rounds` and `⟨WHW*, Y⟩` over
/// strategies for the reversed rounds, by two independent solves.
pub fn optimum_pair(h: &HermitianOperator, rounds: &RoundStructure, opts: &SolverOptions) -> Result<OptimumPair> {
    let fwd = optimal_strategy_value(h, rounds, opts)?;
    let rev = optimal_strategy_value(&time_reversed(h, rounds)?, &rounds.reversed(), opts)?;
    Ok(OptimumPair {
        forward_opt: fwd.value,
        reversed_opt: rev.value,
        forward_solution: fwd.solution,
        reversed_solution: rev.solution,
    })
}

/// [`optimum_pair`] for `H = uu*`; the two optima agree.
pub fn corollary_check(u: &[C64], rounds: &RoundStructure, opts: &SolverOptions) -> Result<OptimumPair> {
    optimum_pair(&rank_one(u, rounds)?, rounds, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::identity_channel;
    use crate::matrix::vec_identity;
    use crate::random::{random_pure_state, trial_rng};
    use crate::strategies::{random_strategy, strategy_from_channels, unitary_realization, validate_strategy};

    fn identity_strategy(d: usize) -> (RoundStructure, StrategyOperator) {
        let rounds = RoundStructure::new([("X1", d, "Y1", d)]).unwrap();
        let l = Layout::single("X1", d).unwrap();
        let ch = identity_channel(&l).unwrap();
        let out = Layout::single("Y1", d).unwrap();
        let ch = crate::channels::Channel::from_choi(
            ch.choi().relabel(&[("X1", "Y1"), ("X1_in", "X1")]).unwrap(),
            l,
            out,
            crate::channels::ChannelKind::Channel,
        )
        .unwrap();
        let x = strategy_from_channels(&[ch], &rounds).unwrap();
        (rounds, x)
    }

    #[test]
    fn identity_channel_bridge() {
        let (rounds, x) = identity_strategy(2);
        let r = unitary_realization(&x).unwrap();
        let u: Vec<C64> = vec_identity::<f64>(2).into_iter().map(|z| z / 2f64.sqrt()).collect();
        let a = build_a(&r, &u).unwrap();
        let pairing = x.op().inner_real(&rank_one(&u, &rounds).unwrap()).unwrap();
        assert!((pairing - 2.0).abs() < 1e-12);
        assert!((norm_sqr_of(&a, r.v()).unwrap() - pairing).abs() < 1e-12);
        let res = reverse_strategy(&r, &u, ReversalMode::Match).unwrap();
        assert!((res.reversed_value - res.forward_value).abs() < 1e-10);
    }

    #[test]
    fn zero_vector() {
        let (rounds, x) = identity_strategy(2);
        let r = unitary_realization(&x).unwrap();
        let u = vec![C64::new(0.0, 0.0); 4];
        let a = build_a(&r, &u).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        for mode in [ReversalMode::Maximize, ReversalMode::Match] {
            let res = reverse_strategy(&r, &u, mode).unwrap();
            assert_eq!(res.forward_value, 0.0);
            assert!(res.reversed_value.abs() < 1e-14);
            validate_strategy(res.reversed.op(), &rounds.reversed()).unwrap();
        }
        let c = corollary_check(&u, &rounds, &SolverOptions::default()).unwrap();
        assert!(c.forward_opt.abs() < 1e-8 && c.reversed_opt.abs() < 1e-8);
    }

    #[test]
    fn choose_w_trivial_cases() {
        let l = Layout::single("z", 2).unwrap();
        let (w, v) = choose_w(&Matrix::identity(&l), 1.0, ReversalMode::Maximize).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!((w.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-14);

        let rows = Layout::single("zn", 3).unwrap();
        let mut a = Matrix::zeros(rows, Layout::single("z0", 2).unwrap());
        a.set(0, 0, C64::new(2.0, 0.0));
        let (w, v) = choose_w(&a, 4.0, ReversalMode::Match).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!((w[0].norm() - 1.0).abs() < 1e-12);
        assert!(matches!(choose_w(&a, 5.0, ReversalMode::Match), Err(Error::MatchInfeasible { .. })));
    }

    #[test]
    fn random_match_hits_target() {
        let mut rng = trial_rng(10, 0);
        let a = crate::random::gaussian_matrix(Layout::single("zn", 6).unwrap(), Layout::single("z0", 4).unwrap(), &mut rng);
        let v = random_pure_state(&Layout::single("z0", 4).unwrap(), &mut rng);
        let target = norm_sqr_of(&a, &v).unwrap();
        let (_, value) = choose_w(&a, target, ReversalMode::Match).unwrap();
        assert!((value - target).abs() <= 1e-10 * target.max(1.0));
        // the shared nonzero spectrum that makes this possible
        let fwd = eig_hermitian(&Hermitian::symmetrized(a.adjoint().matmul(&a).unwrap())).unwrap().values;
        let rev = eig_hermitian(&reversed_gram(&a).unwrap()).unwrap().values;
        for (i, f) in fwd.iter().enumerate() {
            assert!((f - rev[i]).abs() < 1e-10 * f.max(1.0));
        }
        assert!(rev[4..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn two_round_random_instances() {
        let rounds = RoundStructure::from_dims(&[(2, 2), (2, 2)]).unwrap();
        for t in 0..3 {
            let mut rng = trial_rng(11, t);
            let x = random_strategy(&rounds, &[2], &mut rng).unwrap();
            let r = unitary_realization(&x).unwrap();
            let u = random_pure_state(&rounds.layout().unwrap(), &mut rng);
            let m = reverse_strategy(&r, &u, ReversalMode::Maximize).unwrap();
            assert!(m.reversed_value >= m.forward_value - 1e-8);
            assert!(m.forward_bridge < 1e-10 && m.reversed_bridge < 1e-10);
            let e = reverse_strategy(&r, &u, ReversalMode::Match).unwrap();
            assert!((e.reversed_value - e.forward_value).abs() < 1e-8);
            validate_strategy(e.reversed.op(), &rounds.reversed()).unwrap();
            // the reversal never exceeds the reversed optimum
            let c = corollary_check(&u, &rounds, &SolverOptions::default()).unwrap();
            assert!(m.reversed_value <= c.reversed_opt + 1e-7);
            assert!((c.forward_opt - c.reversed_opt).abs() < 1e-6);
        }
    }
}
