//! Acceptance suite. Every criterion runs on seeded random instances and
//! prints one PASS/FAIL line; the test fails if any criterion fails.

use std::fmt::Write as _;

use combforge::channels::{random_channel, Channel};
use combforge::entropy::{four_message_values, h_min, verify_min_max_identity, verify_statement_equivalence};
use combforge::linalg::{eig_hermitian, inverse_pd};
use combforge::random::{random_hermitian, random_pure_state, random_unitary, trial_rng, TrialRng};
use combforge::reversal::{build_a, corollary_check, optimum_pair, reverse_strategy, time_reversed, ReversalMode};
use combforge::sdp::{SdpSolution, SolverOptions};
use combforge::strategies::{
    co_strategy_functional, random_strategy, random_strategy_channels, recompose_realization, simulate_interaction,
    strategy_from_channels, unitary_realization, RoundStructure,
};
use combforge::{Hermitian, HermitianOperator, Layout, Matrix, C64};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
    solutions: Vec<SdpSolution>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail, solutions: vec![] }
    }
}

fn random_rounds(rng: &mut TrialRng, n: usize, dims: &[usize]) -> RoundStructure {
    let pick = |rng: &mut TrialRng| dims[rng.random_range(0..dims.len())];
    let d: Vec<(usize, usize)> = (0..n).map(|_| (pick(rng), pick(rng))).collect();
    RoundStructure::from_dims(&d).unwrap()
}

fn memory_dims(n: usize) -> Vec<usize> {
    vec![2; n.saturating_sub(1)]
}

fn sq_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn corollary_equality() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    let mut sols = vec![];
    for t in 0..50 {
        let mut rng = trial_rng(101, t);
        let n = rng.random_range(1..=2);
        let rounds = random_rounds(&mut rng, n, &[1, 2, 3]);
        let u = random_pure_state(&rounds.layout().unwrap(), &mut rng);
        match corollary_check(&u, &rounds, &opts) {
            Ok(c) => {
                let rel = c.difference() / c.forward_opt.max(1.0);
                worst = worst.max(rel);
                if rel > 1e-5 {
                    fails += 1;
                }
                sols.push(c.forward_solution);
                sols.push(c.reversed_solution);
            }
            Err(_) => fails += 1,
        }
    }
    Outcome { pass: fails == 0, detail: format!("50 instances, worst |Δ|/max(1,fwd) {worst:.2e}, failures {fails}"), solutions: sols }
}

struct ReversalInstance {
    forward_pair: f64,
    forward_norm: f64,
    reversed_pair: f64,
    reversed_norm: f64,
    residual: f64,
    forward_value: f64,
    reversed_value: f64,
}

/// Runs the reversal and recomputes both pairings and both norms from
/// scratch.
fn reversal_instance(seed: u64, t: u64, mode: ReversalMode) -> ReversalInstance {
    let mut rng = trial_rng(seed, t);
    let rounds = loop {
        let n = rng.random_range(1..=2);
        let r = random_rounds(&mut rng, n, &[1, 2]);
        if mode == ReversalMode::Maximize || r.y_total() <= r.x_total() {
            break r;
        }
    };
    let x = random_strategy(&rounds, &memory_dims(rounds.len()), &mut rng).unwrap();
    let r = unitary_realization(&x).unwrap();
    let u = random_pure_state(&rounds.layout().unwrap(), &mut rng);
    let res = reverse_strategy(&r, &u, mode).unwrap();
    let uu = Hermitian::projector(&u, &rounds.layout().unwrap()).unwrap();
    let a = build_a(&r, &u).unwrap();
    let x_re = recompose_realization(&r).unwrap();
    ReversalInstance {
        forward_pair: x_re.op().inner_real(&uu).unwrap(),
        forward_norm: sq_norm(&a.mul_vec(r.v()).unwrap()),
        reversed_pair: res.reversed.op().inner_real(&time_reversed(&uu, &rounds).unwrap()).unwrap(),
        reversed_norm: sq_norm(&a.transpose().mul_vec(&res.w).unwrap()),
        residual: res.reversed.max_residual(),
        forward_value: res.forward_value,
        reversed_value: res.reversed_value,
    }
}

fn reversal_inequality() -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut worst_deficit = f64::NEG_INFINITY;
    let mut fails = 0;
    for t in 0..25 {
        let i = reversal_instance(202, t, ReversalMode::Maximize);
        worst_res = worst_res.max(i.residual);
        worst_deficit = worst_deficit.max(i.forward_value - i.reversed_value);
        if i.residual > 1e-8 || i.reversed_value < i.forward_value - 1e-8 {
            fails += 1;
        }
    }
    Outcome::new(
        fails == 0,
        format!("25 instances, worst residual {worst_res:.2e}, worst fwd−rev {worst_deficit:.2e}, failures {fails}"),
    )
}

fn reversal_equality() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..25 {
        let i = reversal_instance(303, t, ReversalMode::Match);
        worst = worst.max((i.reversed_value - i.forward_value).abs());
    }
    Outcome::new(worst <= 1e-8, format!("25 instances with Πy ≤ Πx, worst |Δ| {worst:.2e}"))
}

fn value_bridge() -> Outcome {
    let mut worst_f: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    for (seed, mode) in [(202, ReversalMode::Maximize), (303, ReversalMode::Match)] {
        for t in 0..25 {
            let i = reversal_instance(seed, t, mode);
            worst_f = worst_f.max((i.forward_pair - i.forward_norm).abs());
            worst_r = worst_r.max((i.reversed_pair - i.reversed_norm).abs());
        }
    }
    Outcome::new(
        worst_f <= 1e-10 && worst_r <= 1e-10,
        format!("50 instances, worst forward {worst_f:.2e}, worst reversed {worst_r:.2e}"),
    )
}

fn realization_roundtrip() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut biggest = 0;
    for t in 0..25 {
        let mut rng = trial_rng(404, t);
        let rounds = if t == 0 {
            RoundStructure::from_dims(&[(2, 2); 4]).unwrap()
        } else {
            loop {
                let n = rng.random_range(1..=3);
                let r = random_rounds(&mut rng, n, &[1, 2, 3, 4]);
                if r.x_total() * r.y_total() <= 256 {
                    break r;
                }
            }
        };
        biggest = biggest.max(rounds.x_total() * rounds.y_total());
        let x = random_strategy(&rounds, &memory_dims(rounds.len()), &mut rng).unwrap();
        let back = recompose_realization(&unitary_realization(&x).unwrap()).unwrap();
        let rel = back.op().sub(x.op()).unwrap().frobenius_norm() / x.op().frobenius_norm();
        worst = worst.max(rel);
    }
    Outcome::new(worst <= 1e-7, format!("25 strategies up to dim {biggest}, worst relative error {worst:.2e}"))
}

fn min_max_identity() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    let mut sols = vec![];
    let mut fails = 0;
    for t in 0..30 {
        let dims = if t < 20 { [2, 2, 2] } else { [2, 3, 2] };
        let l = Layout::new([("X", dims[0]), ("Y", dims[1]), ("Z", dims[2])]).unwrap();
        let u = random_pure_state(&l, &mut trial_rng(505, t));
        match verify_min_max_identity(&u, &l, &opts) {
            Ok(r) => {
                worst = worst.max(r.identity_residual);
                sols.extend(r.solutions);
            }
            Err(_) => fails += 1,
        }
    }
    Outcome {
        pass: fails == 0 && worst <= 1e-4,
        detail: format!("30 states, worst |H_min + H_max| {worst:.2e} bits, failures {fails}"),
        solutions: sols,
    }
}

/// `ψ*(I ⊗ Y)⁻¹ψ · Tr Y` is the smallest feasible `Tr(tY)` along the ray of
/// `Y ≻ 0`, so minimizing it over `Y` solves `min Tr Y s.t. I ⊗ Y ⪰ ψψ*`.
fn ray_cost(params: &[f64], psi: &[C64], da: usize, db: usize) -> f64 {
    let lb = Layout::single("B", db).unwrap();
    let mut g = Matrix::zeros(lb.clone(), lb.clone());
    let mut k = 0;
    for i in 0..db {
        for j in 0..=i {
            if i == j {
                g.set(i, j, C64::new(params[k], 0.0));
                k += 1;
            } else {
                g.set(i, j, C64::new(params[k], params[k + 1]));
                k += 2;
            }
        }
    }
    let y = Hermitian::symmetrized(g.matmul(&g.adjoint()).unwrap());
    let yi = match inverse_pd(&y) {
        Ok(m) => m,
        Err(_) => return f64::INFINITY,
    };
    let big = Hermitian::identity(&Layout::single("A", da).unwrap()).tensor(&yi).unwrap();
    let q: f64 = big.mul_vec(psi).unwrap().iter().zip(psi).map(|(a, b)| (b.conj() * a).re).sum();
    q * y.trace_real()
}

fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: Vec<f64>) -> f64 {
    let n = start.len();
    let mut best_x = start;
    let mut best = f(&best_x);
    for _restart in 0..30 {
        let mut simplex = vec![best_x.clone()];
        for i in 0..n {
            let mut p = best_x.clone();
            p[i] += 0.1 * p[i].abs().max(0.1);
            simplex.push(p);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
        for _ in 0..4000 {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            if (vals[n] - vals[0]).abs() <= 1e-15 * vals[0].abs() {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
                let fc = f(&xc);
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        simplex[i] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        if vals[0] < best - 1e-15 * best.abs() {
            best = vals[0];
            best_x = simplex[0].clone();
        } else {
            break;
        }
    }
    best
}

fn closed_form_crosscheck() -> Outcome {
    let opts = SolverOptions::default();
    let dims = [(2, 2), (2, 3), (3, 2), (3, 3)];
    let mut worst_sdp: f64 = 0.0;
    let mut worst_direct: f64 = 0.0;
    let mut sols = vec![];
    for t in 0..10 {
        let (da, db) = dims[t % dims.len()];
        let l = Layout::new([("A", da), ("B", db)]).unwrap();
        let psi = random_pure_state(&l, &mut trial_rng(606, t as u64));
        let rho = Hermitian::projector(&psi, &l).unwrap();
        let schmidt = eig_hermitian(&rho.partial_trace(&["A"]).unwrap()).unwrap().values;
        let target = schmidt.iter().map(|v| v.max(0.0).sqrt()).sum::<f64>().powi(2);
        // Compressing a feasible Y to supp(Tr_A ψψ*) keeps it feasible and
        // lowers its trace, so the search runs on the support only.
        let eb = eig_hermitian(&rho.partial_trace(&["A"]).unwrap()).unwrap();
        let support: Vec<usize> = (0..db).filter(|&i| eb.values[i] > 1e-12).collect();
        let r = support.len();
        let mut compressed = vec![C64::new(0.0, 0.0); da * r];
        for a in 0..da {
            for (k, &i) in support.iter().enumerate() {
                let e = eb.vector(i);
                compressed[a * r + k] = (0..db).map(|b| e[b].conj() * psi[a * db + b]).sum();
            }
        }
        let mut start = vec![0.0; r * r];
        for i in 0..r {
            start[i * i + 2 * i] = 1.0;
        }
        let direct = nelder_mead(|p| ray_cost(p, &compressed, da, r), start);
        worst_direct = worst_direct.max((direct - target).abs());
        let h = h_min(&rho, &["B"], &opts).unwrap();
        let optimum = 2f64.powf(-h.value);
        worst_sdp = worst_sdp.max((optimum - target).abs());
        sols.push(h.solution);
    }
    Outcome {
        pass: worst_sdp <= 1e-6 && worst_direct <= 1e-6,
        detail: format!("10 states, worst |SDP − (Σ√λ)²| {worst_sdp:.2e}, direct minimization {worst_direct:.2e}"),
        solutions: sols,
    }
}

fn four_message_identity() -> Outcome {
    let opts = SolverOptions::default();
    let l = Layout::new([("X", 2), ("Y", 2), ("Z", 2), ("W", 2)]).unwrap();
    let mut worst_sides: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    let mut sols = vec![];
    for t in 0..10 {
        let u = random_pure_state(&l, &mut trial_rng(707, t));
        let v = four_message_values(&u, &l, &opts).unwrap();
        worst_sides = worst_sides.max((v.lhs - v.rhs).abs());
        worst_power = worst_power.max((v.strategy_opt_forward - v.lhs * v.lhs).abs());
        sols.extend(v.solutions);
    }
    Outcome {
        pass: worst_sides <= 1e-5 && worst_power <= 1e-5,
        detail: format!("10 vectors, worst |lhs − rhs| {worst_sides:.2e}, worst |fwd − lhs²| {worst_power:.2e}"),
        solutions: sols,
    }
}

fn negative_control() -> Outcome {
    let opts = SolverOptions::default();
    let rounds = RoundStructure::from_dims(&[(2, 2)]).unwrap();
    let mut sols = vec![];
    for t in 0..1000 {
        let h = random_hermitian(&rounds.layout().unwrap(), &mut trial_rng(808, t));
        let pair = optimum_pair(&h, &rounds, &opts).unwrap();
        let d = pair.difference();
        sols.push(pair.forward_solution);
        sols.push(pair.reversed_solution);
        if d > 1e-2 {
            return Outcome {
                pass: true,
                detail: format!("trial {t}: forward {:.6} vs reversed {:.6}", pair.forward_opt, pair.reversed_opt),
                solutions: sols,
            };
        }
    }
    Outcome { pass: false, detail: "no gap above 1e-2 in 1000 trials".into(), solutions: sols }
}

fn random_effect(layout: &Layout, rng: &mut TrialRng) -> HermitianOperator {
    let u = random_unitary(layout, rng).unwrap();
    let diag: Vec<f64> = (0..layout.total_dim()).map(|_| rng.random_range(0.0..1.0)).collect();
    Hermitian::from_real_diagonal(layout, &diag).unwrap().conjugate_by(&u).unwrap()
}

fn interaction_functional() -> Outcome {
    let rounds = RoundStructure::from_dims(&[(2, 2); 3]).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut rng = trial_rng(909, t);
        let alice = random_strategy_channels(&rounds, &[2, 2], &mut rng).unwrap();
        let lay = |v: &[(String, usize)]| Layout::new(v.iter().cloned()).unwrap();
        let w = |k: usize| (format!("W{k}"), 2usize);
        let mut bob: Vec<Channel> = vec![];
        for k in 1..=4 {
            let mut input = vec![];
            if k > 1 {
                input.push(w(k - 1));
                input.push((format!("Y{}", k - 1), 2));
            }
            let mut output = vec![];
            if k <= 3 {
                output.push((format!("X{k}"), 2));
            }
            output.push(w(k));
            bob.push(random_channel(&lay(&input), &lay(&output), 2, &mut rng).unwrap());
        }
        let q = random_effect(&lay(&[w(4)]), &mut rng);
        let p = co_strategy_functional(&bob, &q, &rounds).unwrap();
        let x = strategy_from_channels(&alice, &rounds).unwrap();
        let paired = x.op().inner_real(&p).unwrap();
        let simulated = simulate_interaction(&alice, &bob, &q, &rounds).unwrap();
        worst = worst.max((paired - simulated).abs());
    }
    Outcome::new(worst <= 1e-10, format!("10 protocols, worst |⟨P, X⟩ − simulation| {worst:.2e}"))
}

fn statement_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for t in 0..10 {
        let mut rng = trial_rng(1010, t);
        let n = 1 + (t as usize % 2);
        let rounds = random_rounds(&mut rng, n, &[1, 2, 3]);
        let phis = random_strategy_channels(&rounds, &memory_dims(n), &mut rng).unwrap();
        let c = verify_statement_equivalence(&phis, &rounds).unwrap();
        worst = worst.max(c.agreement);
        if !c.holds {
            fails += 1;
        }
    }
    Outcome::new(fails == 0 && worst <= 1e-8, format!("10 sequences, worst agreement {worst:.2e}, failures {fails}"))
}

fn solver_health(sols: &[SdpSolution]) -> Outcome {
    let gap = sols.iter().map(|s| s.gap).fold(0.0, f64::max);
    let res = sols.iter().map(|s| s.residuals.primal_eq).fold(0.0, f64::max);
    let weak = sols.iter().map(|s| s.weak_duality_violation).fold(0.0, f64::max);
    let all_optimal = sols.iter().all(|s| s.is_optimal());
    Outcome::new(
        all_optimal && gap <= 1e-7 && res <= 1e-8 && weak <= 1e-9,
        format!("{} solves, worst gap {gap:.2e}, worst primal residual {res:.2e}, worst weak-duality violation {weak:.2e}", sols.len()),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("optimum equality under reversal", corollary_equality),
        ("reversal construction, inequality", reversal_inequality),
        ("reversal construction, equality", reversal_equality),
        ("value bridge", value_bridge),
        ("realization roundtrip", realization_roundtrip),
        ("min/max entropy identity", min_max_identity),
        ("min-entropy closed form", closed_form_crosscheck),
        ("four-message identity", four_message_identity),
        ("negative control", negative_control),
        ("interaction functional", interaction_functional),
        ("statement equivalence", statement_equivalence),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(*f)).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Outcome::new(false, "panicked".into()))).collect()
    });
    let all_solutions: Vec<SdpSolution> = outcomes.iter().flat_map(|o| o.solutions.iter().cloned()).collect();
    let health = solver_health(&all_solutions);

    let mut lines = vec![];
    let mut report = String::new();
    for (i, ((name, _), o)) in criteria.iter().zip(&outcomes).enumerate() {
        let num = if i < 10 { i + 1 } else { i + 2 };
        lines.push((num, *name, o.pass, o.detail.clone()));
    }
    lines.push((11, "solver health", health.pass, health.detail.clone()));
    lines.sort_by_key(|l| l.0);
    for (num, name, pass, detail) in &lines {
        let _ = writeln!(report, "criterion {num:>2} {:<36} {}  {detail}", name, if *pass { "PASS" } else { "FAIL" });
    }
    print!("{report}");
    let failed: Vec<usize> = lines.iter().filter(|l| !l.2).map(|l| l.0).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
