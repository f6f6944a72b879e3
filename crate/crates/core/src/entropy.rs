//! Relative and conditional min/max entropies (in bits), the four-message
//! fidelity identity, quantum correlation and the channel/unital-map
//! descriptions of a strategy.

use serde::Serialize;

use crate::channels::{transpose_channel, Channel};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::{eig_hermitian, fidelity};
use crate::matrix::{Hermitian, Matrix};
use crate::reversal::optimum_pair;
use crate::sdp::{
    dense_op, factor_map, identity_op, optimal_strategy_value, select_block, solve, Block, SdpProblem, SdpSolution,
    SolverOptions, Term,
};
use crate::strategies::{validate_strategy, RoundStructure};
use crate::{HermitianOperator, C64};

/// Relative eigenvalue threshold for supports.
pub const RANK_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-9;

/// `log₂ min{λ ≥ 0 : P ≤ λQ}`; `+∞` when `supp P ⊄ supp Q`.
pub fn d_max(p: &HermitianOperator, q: &HermitianOperator) -> Result<f64> {
    let p = if p.layout() == q.layout() { p.clone() } else { p.permute_factors(&q.layout().labels())? };
    let eq = eig_hermitian(q)?;
    let qmax = eq.max_abs_value();
    let cut = RANK_TOL * qmax.max(f64::MIN_POSITIVE);
    let scale = eig_hermitian(&p)?.max_abs_value();
    // component of P outside supp Q
    let kernel = eq.reconstruct_with(q.layout(), |l| if l > cut { 0.0 } else { 1.0 });
    let leak = kernel.as_matrix().matmul(p.as_matrix())?.matmul(kernel.as_matrix())?.max_abs();
    if leak > RANK_TOL * scale.max(f64::MIN_POSITIVE) * q.dim() as f64 {
        return Ok(f64::INFINITY);
    }
    let root_inv = eq.reconstruct_with(q.layout(), |l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let m = p.conjugate_by(root_inv.as_matrix())?;
    Ok(eig_hermitian(&m)?.values[0].log2())
}

/// `−log₂ F(P, Q)²`; `+∞` at zero fidelity.
pub fn d_min(p: &HermitianOperator, q: &HermitianOperator) -> Result<f64> {
    let p = if p.layout() == q.layout() { p.clone() } else { p.permute_factors(&q.layout().labels())? };
    let f = fidelity(&p, q)?;
    if f <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-2.0 * f.log2())
}

fn check_state(rho: &HermitianOperator) -> Result<()> {
    let eig = eig_hermitian(rho)?;
    crate::linalg::check_psd(&eig)?;
    let tr = rho.trace_real();
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidInput(format!("state has trace {tr}")));
    }
    Ok(())
}

const SYS: &str = "A";
const COND: &str = "B";

/// `ρ` regrouped as two factors: everything outside `conditioning`, then
/// the `conditioning` factors.
fn bipartition(rho: &HermitianOperator, conditioning: &[&str]) -> Result<HermitianOperator> {
    let l = rho.layout();
    for c in conditioning {
        l.dim_of(c)?;
    }
    let mut order: Vec<&str> = l.labels().into_iter().filter(|x| !conditioning.contains(x)).collect();
    let da: usize = order.iter().map(|x| l.dim_of(x).expect("label")).product();
    order.extend(conditioning);
    let db = l.total_dim() / da;
    let two = Layout::new([(SYS, da), (COND, db)])?;
    let m = rho.permute_factors(&order)?.into_matrix().with_layouts(two.clone(), two)?;
    Ok(Hermitian::symmetrized(m))
}

#[derive(Clone, Debug, Serialize)]
pub struct MinEntropy {
    pub value: f64,
    /// Optimal `Y` of `min Tr Y s.t. I ⊗ Y ⪰ ρ` on the conditioning space.
    pub dual: HermitianOperator,
    pub solution: SdpSolution,
}

/// `H_min(A|B)` for `B = conditioning`, from `min Tr Y s.t. I_A ⊗ Y ⪰ ρ`.
pub fn h_min(rho: &HermitianOperator, conditioning: &[&str], opts: &SolverOptions) -> Result<MinEntropy> {
    check_state(rho)?;
    let rho = bipartition(rho, conditioning)?;
    let l = rho.layout().clone();
    let la = l.select(&[SYS])?;
    let lb = l.select(&[COND])?;
    let mut p = SdpProblem::new(vec![
        Block { label: "Y".into(), layout: lb.clone() },
        Block { label: "S".into(), layout: l.clone() },
    ]);
    p.set_objective(0, Hermitian::identity(&lb).scale(-1.0))?;
    let mut ts: Vec<Term> =
        factor_map(&lb, &[], &la, &[SYS, COND])?.into_iter().map(|op| Term { block: 0, weight: 1.0, op }).collect();
    ts.push(Term { block: 1, weight: -1.0, op: identity_op(l.total_dim()) });
    p.add_constraint("dominate", ts, rho)?;
    let sol = solve(&p, opts)?.require_optimal()?;
    let min_trace = -sol.primal_value;
    let dual = sol.primal_blocks[0].clone();
    Ok(MinEntropy { value: -min_trace.log2(), dual, solution: sol })
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxEntropy {
    pub value: f64,
    /// The optimal `σ` on the conditioning space.
    pub sigma: HermitianOperator,
    /// `F(ρ, I ⊗ σ)²` evaluated directly at the returned `σ`.
    pub fidelity_sq: f64,
    pub solution: SdpSolution,
}

/// `H_max(A|B)` for `B = conditioning`: with a purification `u` of `ρ` on
/// `(A, B, R)`, `2^{H_max}` is the maximum of `⟨uu*, X⟩` over `X ⪰ 0` with
/// `Tr_R X = I_A ⊗ σ` and `σ` a state, which is a two-round strategy
/// program with a trivial first input.
pub fn h_max(rho: &HermitianOperator, conditioning: &[&str], opts: &SolverOptions) -> Result<MaxEntropy> {
    check_state(rho)?;
    let rho = bipartition(rho, conditioning)?;
    let (da, db) = (rho.layout().dims()[0], rho.layout().dims()[1]);
    let eig = eig_hermitian(&rho)?;
    let cut = RANK_TOL * eig.max_abs_value();
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > cut).collect();
    let r = kept.len().max(1);
    let n = rho.dim();
    let mut u = vec![C64::new(0.0, 0.0); n * r];
    for (j, &i) in kept.iter().enumerate() {
        let v = eig.vector(i);
        let s = eig.values[i].sqrt();
        for a in 0..n {
            u[a * r + j] = v[a] * s;
        }
    }
    let purified = Layout::new([(SYS, da), (COND, db), ("R", r)])?;
    let h = Hermitian::projector(&u, &purified)?.tensor(&Hermitian::identity(&Layout::single("in~", 1)?))?;
    let rounds = RoundStructure::new([("in~", 1, COND, db), (SYS, da, "R", r)])?;
    let opt = optimal_strategy_value(&h, &rounds, opts)?;
    let sigma = opt.optimizer.marginal(1).partial_trace(&["in~"])?;
    let lift = Hermitian::identity(&Layout::single(SYS, da)?).tensor(&sigma)?;
    let f = fidelity(&rho, &lift)?;
    Ok(MaxEntropy { value: opt.value.log2(), sigma, fidelity_sq: f * f, solution: opt.solution })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub h_min: f64,
    pub h_max: f64,
    pub identity_residual: f64,
    pub h_min_dual: HermitianOperator,
    pub h_max_sigma: HermitianOperator,
    pub solutions: Vec<SdpSolution>,
}

fn factor_labels(layout: &Layout, count: usize) -> Result<Vec<&str>> {
    if layout.len() != count {
        return Err(Error::InvalidInput(format!("expected {count} factors, got {layout}")));
    }
    Ok(layout.labels())
}

/// `H_min(X|Y)` on `Tr_Z uu*` and `H_max(X|Z)` on `Tr_Y uu*` for a unit
/// vector `u` on a three-factor layout `(X, Y, Z)`.
pub fn verify_min_max_identity(u: &[C64], layout: &Layout, opts: &SolverOptions) -> Result<EntropyReport> {
    let l = factor_labels(layout, 3)?;
    let psi = Hermitian::projector(u, layout)?;
    let lo = h_min(&psi.partial_trace(&[l[2]])?, &[l[1]], opts)?;
    let hi = h_max(&psi.partial_trace(&[l[1]])?, &[l[2]], opts)?;
    Ok(EntropyReport {
        h_min: lo.value,
        h_max: hi.value,
        identity_residual: (lo.value + hi.value).abs(),
        h_min_dual: lo.dual,
        h_max_sigma: hi.sigma,
        solutions: vec![lo.solution, hi.solution],
    })
}

/// `max F(A, J(Φ) ⊗ I)` over channels `Φ: input → output`, where `A` lives
/// on `output`, `input` and any remaining factors. The program runs on the
/// support of `A = V D V*`: maximize `Re Tr G₁₂` over
/// `G = [[D, G₁₂], [G₁₂*, V*(J ⊗ I)V]] ⪰ 0`.
pub fn max_channel_fidelity(
    a: &HermitianOperator,
    input: &Layout,
    output: &Layout,
    opts: &SolverOptions,
) -> Result<(f64, SdpSolution)> {
    let mut ends = output.labels();
    ends.extend(input.labels());
    let rest = a.layout().without(&ends)?;
    let choi = output.concat(input)?;
    let eig = eig_hermitian(a)?;
    let cut = RANK_TOL * eig.max_abs_value();
    let support: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > cut).collect();
    let r = support.len().max(1);
    let n = a.dim();
    let g = Layout::single("g", 2 * r)?;
    let lr = Layout::single("s", r)?;
    let mut v = Matrix::zeros(a.layout().clone(), lr.clone());
    let mut d = vec![0.0; r];
    for (j, &i) in support.iter().enumerate() {
        let col = eig.vector(i);
        for row in 0..n {
            v.set(row, j, col[row]);
        }
        d[j] = eig.values[i];
    }
    let mut p = SdpProblem::new(vec![Block { label: "G".into(), layout: g.clone() }, Block { label: "J".into(), layout: choi.clone() }]);
    let half = Matrix::from_fn(g.clone(), g.clone(), |i, j| {
        if (i + r == j) || (j + r == i) {
            C64::new(0.5, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    p.set_objective(0, Hermitian::new(half)?)?;
    p.add_constraint(
        "support",
        vec![Term { block: 0, weight: 1.0, op: select_block(0, r, 2 * r)? }],
        Hermitian::from_real_diagonal(&lr, &d)?,
    )?;
    let order = a.layout().labels();
    let mut ts = vec![Term { block: 0, weight: 1.0, op: select_block(r, r, 2 * r)? }];
    let vt = v.adjoint();
    for k in factor_map(&choi, &[], &rest, &order)? {
        let kd = Matrix::from_vec(a.layout().clone(), choi.clone(), k.to_dense())?;
        ts.push(Term { block: 1, weight: -1.0, op: dense_op(&vt.matmul(&kd)?) });
    }
    p.add_constraint("compressed", ts, Hermitian::zeros(&lr))?;
    let tp: Vec<Term> = factor_map(&choi, &output.labels(), &Layout::scalar(), &input.labels())?
        .into_iter()
        .map(|op| Term { block: 1, weight: 1.0, op })
        .collect();
    p.add_constraint("trace_preserving", tp, Hermitian::identity(input))?;
    let sol = solve(&p, opts)?.require_optimal()?;
    Ok((sol.primal_value, sol))
}

#[derive(Clone, Debug, Serialize)]
pub struct FourMessageValues {
    pub lhs: f64,
    pub rhs: f64,
    pub strategy_opt_forward: f64,
    pub strategy_opt_reversed: f64,
    pub solutions: Vec<SdpSolution>,
}

/// Both sides of `max_Φ F(Tr_W uu*, J(Φ) ⊗ I_Z) = max_Ψ F(Tr_Y uu*, I_X ⊗ J(Ψ))`
/// with `Φ: Y → X`, `Ψ: W → Z`, and the two strategy optima for the
/// interaction that receives `Y`, answers `X`, receives `Z`, answers `W`.
///
/// Each side traces out the last output of its interaction: `W` going
/// forward, `Y` once time is reversed. Tracing `X` on the right instead does
/// not give an identity.
pub fn four_message_values(u: &[C64], layout: &Layout, opts: &SolverOptions) -> Result<FourMessageValues> {
    let l = factor_labels(layout, 4)?;
    let (x, y, z, w) = (l[0], l[1], l[2], l[3]);
    let d = layout.dims();
    let psi = Hermitian::projector(u, layout)?;
    let lx = Layout::single(x, d[0])?;
    let ly = Layout::single(y, d[1])?;
    let lz = Layout::single(z, d[2])?;
    let lw = Layout::single(w, d[3])?;
    let (lhs, s1) = max_channel_fidelity(&psi.partial_trace(&[w])?, &ly, &lx, opts)?;
    let (rhs, s2) = max_channel_fidelity(&psi.partial_trace(&[y])?, &lw, &lz, opts)?;
    let rounds = RoundStructure::new([(y, d[1], x, d[0]), (z, d[2], w, d[3])])?;
    let pair = optimum_pair(&psi, &rounds, opts)?;
    Ok(FourMessageValues {
        lhs,
        rhs,
        strategy_opt_forward: pair.forward_opt,
        strategy_opt_reversed: pair.reversed_opt,
        solutions: vec![s1, s2, pair.forward_solution, pair.reversed_solution],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumCorrelation {
    pub value: f64,
    /// `value / Πy`, the squared fidelity with the maximally entangled state.
    pub squared_fidelity: f64,
    pub solution: SdpSolution,
}

/// The strategy optimum for objective `ρ`.
pub fn quantum_correlation(rho: &HermitianOperator, rounds: &RoundStructure, opts: &SolverOptions) -> Result<QuantumCorrelation> {
    check_state(rho)?;
    let opt = optimal_strategy_value(rho, rounds, opts)?;
    let f2 = opt.value / rounds.y_total() as f64;
    if !(-1e-9..=1.0 + 1e-9).contains(&f2) {
        return Err(Error::Solver(format!("squared fidelity {f2} outside [0, 1]")));
    }
    Ok(QuantumCorrelation { value: opt.value, squared_fidelity: f2.clamp(0.0, 1.0), solution: opt.solution })
}

fn reference_label(label: &str) -> String {
    format!("{label}~ref")
}

/// `Σ_{a} |a⟩|a⟩` over the given factors, fed copy first then the
/// reference copies.
fn entangled_with_references(factors: &[(String, usize)]) -> Result<HermitianOperator> {
    let fed = Layout::new(factors.iter().cloned())?;
    let refs = Layout::new(factors.iter().map(|(l, d)| (reference_label(l), *d)))?;
    let layout = fed.concat(&refs)?;
    let n = fed.total_dim();
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for a in 0..n {
        v[a * n + a] = C64::new(1.0, 0.0);
    }
    Hermitian::projector(&v, &layout)
}

/// Applies `c` to the matching factors, first adding any trivial input
/// factors the state does not carry yet.
fn feed(rho: &HermitianOperator, c: &Channel) -> Result<HermitianOperator> {
    let mut rho = rho.clone();
    for f in c.input_layout().factors() {
        if !rho.layout().contains(&f.label) {
            if f.dim != 1 {
                return Err(Error::DimensionMismatch(format!("input `{}` is not available", f.label)));
            }
            rho = rho.tensor(&Hermitian::identity(&Layout::single(f.label.clone(), 1)?))?;
        }
    }
    c.apply_to_subsystems(&rho)
}

/// Traces out trivial leftovers, renames references back and orders the
/// factors as `(Y…, X…)`.
fn finish(rho: HermitianOperator, rounds: &RoundStructure, refs: &[&str]) -> Result<HermitianOperator> {
    let layout = rounds.layout()?;
    let renames: Vec<(String, &str)> = refs.iter().map(|l| (reference_label(l), *l)).collect();
    let renames: Vec<(&str, &str)> = renames.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let rho = rho.relabel(&renames)?;
    let extra: Vec<&str> = rho.layout().labels().into_iter().filter(|l| !layout.contains(l)).collect();
    for e in &extra {
        if rho.layout().dim_of(e)? != 1 {
            return Err(Error::DimensionMismatch(format!("factor `{e}` is left over")));
        }
    }
    rho.partial_trace(&extra)?.permute_factors(&layout.labels())
}

#[derive(Clone, Debug, Serialize)]
pub struct StatementCheck {
    /// `‖X₂ − X₃‖_F / ‖X₂‖_F`.
    pub agreement: f64,
    pub valid: bool,
    /// Largest unitality residual of the transposed maps.
    pub unitality: f64,
    pub holds: bool,
}

/// Builds the strategy of `Φ_1..Φ_n` twice: as `(Ξ_n ⊗ id)(vec(I_X)vec(I_X)*)`
/// with the channels applied in order, and as `(id ⊗ Λ_n)(vec(I_Y)vec(I_Y)*)`
/// with the unital maps `Ψ_k = Φ_kᵀ` applied from `k = n` down to `1`.
pub fn verify_statement_equivalence(phis: &[Channel], rounds: &RoundStructure) -> Result<StatementCheck> {
    if phis.len() != rounds.len() {
        return Err(Error::DimensionMismatch(format!("{} channels for {} rounds", phis.len(), rounds.len())));
    }
    let xs: Vec<(String, usize)> = rounds.rounds().iter().map(|r| (r.x_label.clone(), r.x_dim)).collect();
    let ys: Vec<(String, usize)> = rounds.rounds().iter().map(|r| (r.y_label.clone(), r.y_dim)).collect();

    let mut forward = entangled_with_references(&xs)?;
    for phi in phis {
        forward = feed(&forward, phi)?;
    }
    let x2 = finish(forward, rounds, &rounds.x_labels())?;

    let mut backward = entangled_with_references(&ys)?;
    let mut unitality = 0.0f64;
    for phi in phis.iter().rev() {
        let psi = transpose_channel(phi)?;
        unitality = unitality.max(psi.unitality_residual()?);
        backward = feed(&backward, &psi)?;
    }
    let x3 = finish(backward, rounds, &rounds.y_labels())?;

    let agreement = x2.sub(&x3)?.frobenius_norm() / x2.frobenius_norm().max(f64::MIN_POSITIVE);
    let valid = validate_strategy(&x2, rounds).is_ok();
    Ok(StatementCheck { agreement, valid, unitality, holds: valid && agreement <= 1e-8 })
}
