use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use combforge::channels::{random_channel, Channel};
use combforge::io::{read_hermitian, read_json};
use combforge::random::{random_hermitian, random_pure_state, random_unitary, trial_rng, TrialRng};
use combforge::reversal::{optimum_pair, reverse_strategy, ReversalMode, ReversalResult};
use combforge::sdp::{optimal_strategy_value, SdpSolution, SolverOptions, StrategyCertificate};
use combforge::strategies::{
    co_strategy_functional, random_strategy, random_strategy_channels, simulate_interaction, strategy_from_channels,
    unitary_realization, RoundStructure, StrategyOperator,
};
use combforge::{entropy, Error, Hermitian, HermitianOperator, Layout, Matrix, Result, C64};

use crate::report::{Failure, Health, Record};

pub struct Context {
    pub opts: SolverOptions,
    pub health: Health,
    pub tol: Option<f64>,
}

impl Context {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn judge(&self, sols: &[&SdpSolution], identity_ok: bool) -> Option<Failure> {
        if !self.health.check(sols) {
            Some(Failure::Gap)
        } else if !identity_ok {
            Some(Failure::Identity)
        } else {
            None
        }
    }
}

fn read_vector(path: &Path, dim: usize) -> Result<Vec<C64>> {
    let raw: Vec<(f64, f64)> = read_json(path)?;
    if raw.len() != dim {
        return Err(Error::DimensionMismatch(format!("vector of length {} where {dim} is needed", raw.len())));
    }
    Ok(raw.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

#[derive(Serialize)]
pub struct SolveRecord {
    value: f64,
    dual_value: f64,
    gap: f64,
    primal_residual: f64,
    optimizer_residual: f64,
    optimizer: StrategyOperator,
    certificate: StrategyCertificate,
    #[serde(skip)]
    failure: Option<Failure>,
}

impl Record for SolveRecord {
    const METRIC: &'static str = "gap";
    fn metric(&self) -> f64 {
        self.gap
    }
    fn failure(&self) -> Option<Failure> {
        self.failure
    }
    fn text(&self) -> String {
        format!("value {:.12} dual {:.12} gap {:.2e}", self.value, self.dual_value, self.gap)
    }
}

pub fn solve(ctx: &Context, h: &Path, rounds: &RoundStructure) -> Result<SolveRecord> {
    let h = read_hermitian(h)?;
    let opt = optimal_strategy_value(&h, rounds, &ctx.opts)?;
    let sol = &opt.solution;
    Ok(SolveRecord {
        value: opt.value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        primal_residual: sol.residuals.primal_eq,
        optimizer_residual: opt.optimizer.max_residual(),
        failure: ctx.judge(&[sol], true),
        optimizer: opt.optimizer,
        certificate: opt.certificate,
    })
}

#[derive(Serialize)]
pub struct ReverseRecord {
    result: ReversalResult,
    residual: f64,
    #[serde(skip)]
    failure: Option<Failure>,
}

impl Record for ReverseRecord {
    const METRIC: &'static str = "bridge";
    fn metric(&self) -> f64 {
        self.result.forward_bridge.max(self.result.reversed_bridge)
    }
    fn failure(&self) -> Option<Failure> {
        self.failure
    }
    fn text(&self) -> String {
        format!(
            "forward {:.12} reversed {:.12} residual {:.2e} bridges {:.2e}/{:.2e}",
            self.result.forward_value, self.result.reversed_value, self.residual, self.result.forward_bridge, self.result.reversed_bridge
        )
    }
}

pub fn reverse(
    ctx: &Context,
    rounds: &RoundStructure,
    strategy: Option<&Path>,
    vector: Option<&Path>,
    mode: ReversalMode,
    seed: u64,
    trial: u64,
) -> Result<ReverseRecord> {
    let mut rng = trial_rng(seed, trial);
    let layout = rounds.layout()?;
    let x: StrategyOperator = match strategy {
        Some(p) => read_json(p)?,
        None => random_strategy(rounds, &vec![2; rounds.len() - 1], &mut rng)?,
    };
    if x.rounds() != rounds {
        return Err(Error::LayoutMismatch("strategy file rounds differ from --rounds/--dims".into()));
    }
    let u = match vector {
        Some(p) => read_vector(p, layout.total_dim())?,
        None => random_pure_state(&layout, &mut rng),
    };
    let result = reverse_strategy(&unitary_realization(&x)?, &u, mode)?;
    let residual = result.reversed.max_residual();
    let tol = ctx.tol(1e-8);
    let failure = if residual > 1e-8 {
        Some(Failure::Feasibility)
    } else {
        let value_ok = match mode {
            ReversalMode::Maximize => result.reversed_value >= result.forward_value - tol,
            ReversalMode::Match => (result.reversed_value - result.forward_value).abs() <= tol,
        };
        let bridges_ok = result.forward_bridge <= 1e-10 && result.reversed_bridge <= 1e-10;
        (!(value_ok && bridges_ok)).then_some(Failure::Identity)
    };
    Ok(ReverseRecord { result, residual, failure })
}

#[derive(Serialize)]
pub struct CorollaryRecord {
    rounds: RoundStructure,
    forward: f64,
    reversed: f64,
    difference: f64,
    relative: f64,
    max_gap: f64,
    #[serde(skip)]
    failure: Option<Failure>,
}

impl Record for CorollaryRecord {
    const METRIC: &'static str = "relative_difference";
    fn metric(&self) -> f64 {
        self.relative
    }
    fn failure(&self) -> Option<Failure> {
        self.failure
    }
    fn text(&self) -> String {
        format!("forward {:.10} reversed {:.10} |Δ| {:.2e}", self.forward, self.reversed, self.difference)
    }
}

pub fn corollary(ctx: &Context, rounds: &RoundStructure, seed: u64, trial: u64) -> Result<CorollaryRecord> {
    let u = random_pure_state(&rounds.layout()?, &mut trial_rng(seed, trial));
    let c = combforge::reversal::corollary_check(&u, rounds, &ctx.opts)?;
    let relative = c.difference() / c.forward_opt.max(1.0);
    Ok(CorollaryRecord {
        rounds: rounds.clone(),
        forward: c.forward_opt,
        reversed: c.reversed_opt,
        difference: c.difference(),
        relative,
        max_gap: c.forward_solution.gap.max(c.reversed_solution.gap),
        failure: ctx.judge(&[&c.forward_solution, &c.reversed_solution], relative <= ctx.tol(1e-5)),
    })
}

#[derive(Serialize)]
pub struct EntropyRecord {
    layout: Layout,
    h_min: f64,
    h_max: f64,
    identity_residual: f64,
    #[serde(skip)]
    failure: Option<Failure>,
}

impl Record for EntropyRecord {
    const METRIC: &'static str = "identity_residual";
    fn metric(&self) -> f64 {
        self.identity_residual
    }
    fn failure(&self) -> Option<Failure> {
        self.failure
    }
    fn text(&self) -> String {
        format!("H_min {:.9} H_max {:.9} residual {:.2e} bits", self.h_min, self.h_max, self.identity_residual)
    }
}

pub fn entropy(ctx: &Context, dims: [usize; 3], state: Option<&Path>, cut: &str, seed: u64, trial: u64) -> Result<EntropyRecord> {
    let layout = Layout::new([("X", dims[0]), ("Y", dims[1]), ("Z", dims[2])])?;
    let u = match state {
        Some(p) => read_vector(p, layout.total_dim())?,
        None => random_pure_state(&layout, &mut trial_rng(seed, trial)),
    };
    let order: Vec<&str> = std::iter::once(cut).chain(layout.labels().into_iter().filter(|l| *l != cut)).collect();
    if order.len() != 3 {
        return Err(Error::UnknownLabel(cut.to_string()));
    }
    let permuted = Matrix::column(layout.clone(), u)?.permute(&order, &[])?;
    let layout = permuted.row_layout().clone();
    let r = entropy::verify_min_max_identity(permuted.data(), &layout, &ctx.opts)?;
    let sols: Vec<&SdpSolution> = r.solutions.iter().collect();
    Ok(EntropyRecord {
        failure: ctx.judge(&sols, r.identity_residual <= ctx.tol(1e-4)),
        layout,
        h_min: r.h_min,
        h_max: r.h_max,
        identity_residual: r.identity_residual,
    })
}

#[derive(Serialize)]
pub struct SearchRecord {
    forward: f64,
    reversed: f64,
    difference: f64,
    objective: HermitianOperator,
    #[serde(skip)]
    healthy: bool,
}

pub fn search_trial(ctx: &Context, rounds: &RoundStructure, seed: u64, trial: u64) -> Result<SearchRecord> {
    let h = random_hermitian(&rounds.layout()?, &mut trial_rng(seed, trial));
    let pair = optimum_pair(&h, rounds, &ctx.opts)?;
    Ok(SearchRecord {
        forward: pair.forward_opt,
        reversed: pair.reversed_opt,
        difference: pair.difference(),
        healthy: ctx.health.check(&[&pair.forward_solution, &pair.reversed_solution]),
        objective: h,
    })
}

/// The outcome of a search for an objective whose two optima differ.
#[derive(Serialize)]
pub struct CounterexampleRecord {
    threshold: f64,
    searched: usize,
    found_at: Option<usize>,
    found: Option<SearchRecord>,
    #[serde(skip)]
    unhealthy: bool,
}

impl Record for CounterexampleRecord {
    const METRIC: &'static str = "difference";
    fn metric(&self) -> f64 {
        self.found.as_ref().map_or(0.0, |f| f.difference)
    }
    fn failure(&self) -> Option<Failure> {
        if self.unhealthy {
            Some(Failure::Gap)
        } else if self.found.is_none() {
            Some(Failure::Identity)
        } else {
            None
        }
    }
    fn text(&self) -> String {
        match (&self.found, self.found_at) {
            (Some(f), Some(t)) => format!("trial {t}: forward {:.9} reversed {:.9} |Δ| {:.3e}", f.forward, f.reversed, f.difference),
            _ => format!("no difference above {:.1e} in {} trials", self.threshold, self.searched),
        }
    }
}

/// Scans trials in order and keeps the first whose optima differ by more
/// than the threshold.
pub fn counterexample(ctx: &Context, rounds: &RoundStructure, seed: u64, trials: usize) -> Result<CounterexampleRecord> {
    use rayon::prelude::*;
    let threshold = ctx.tol(1e-2);
    const BATCH: usize = 16;
    let mut unhealthy = false;
    for start in (0..trials).step_by(BATCH) {
        let end = (start + BATCH).min(trials);
        let batch: Vec<Result<SearchRecord>> = (start..end).into_par_iter().map(|t| search_trial(ctx, rounds, seed, t as u64)).collect();
        for (t, rec) in (start..end).zip(batch) {
            let rec = rec?;
            unhealthy |= !rec.healthy;
            if rec.difference > threshold {
                return Ok(CounterexampleRecord { threshold, searched: t + 1, found_at: Some(t), found: Some(rec), unhealthy });
            }
        }
    }
    Ok(CounterexampleRecord { threshold, searched: trials, found_at: None, found: None, unhealthy })
}

/// An interaction between a strategy given by its channels and a
/// co-strategy given by channels plus a final effect.
#[derive(Serialize, Deserialize)]
pub struct Protocol {
    pub rounds: RoundStructure,
    pub alice: Vec<Channel>,
    pub bob: Vec<Channel>,
    pub effect: HermitianOperator,
}

fn random_effect(layout: &Layout, rng: &mut TrialRng) -> Result<HermitianOperator> {
    let u = random_unitary(layout, rng)?;
    let diag: Vec<f64> = (0..layout.total_dim()).map(|_| rng.random_range(0.0..1.0)).collect();
    Hermitian::from_real_diagonal(layout, &diag)?.conjugate_by(&u)
}

/// Alice with memory dimension 2 and Bob with a two-dimensional register
/// `W{k}` carried between his steps.
pub fn random_protocol(rounds: &RoundStructure, rng: &mut TrialRng) -> Result<Protocol> {
    let n = rounds.len();
    let alice = random_strategy_channels(rounds, &vec![2; n - 1], rng)?;
    let w = |k: usize| (format!("W{k}"), 2usize);
    let mut bob = vec![];
    for k in 1..=n + 1 {
        let mut input = vec![];
        if k > 1 {
            let r = &rounds.rounds()[k - 2];
            input.push(w(k - 1));
            input.push((r.y_label.clone(), r.y_dim));
        }
        let mut output = vec![];
        if k <= n {
            let r = &rounds.rounds()[k - 1];
            output.push((r.x_label.clone(), r.x_dim));
        }
        output.push(w(k));
        let input = Layout::new(input)?;
        let env = input.total_dim().max(1);
        bob.push(random_channel(&input, &Layout::new(output)?, env, rng)?);
    }
    let effect = random_effect(&Layout::new([w(n + 1)])?, rng)?;
    Ok(Protocol { rounds: rounds.clone(), alice, bob, effect })
}

#[derive(Serialize)]
pub struct SimulateRecord {
    probability: f64,
    pairing: f64,
    difference: f64,
    #[serde(skip)]
    failure: Option<Failure>,
}

impl Record for SimulateRecord {
    const METRIC: &'static str = "difference";
    fn metric(&self) -> f64 {
        self.difference
    }
    fn failure(&self) -> Option<Failure> {
        self.failure
    }
    fn text(&self) -> String {
        format!("probability {:.12} ⟨P, X⟩ {:.12} |Δ| {:.2e}", self.probability, self.pairing, self.difference)
    }
}

pub fn simulate(ctx: &Context, p: &Protocol) -> Result<SimulateRecord> {
    let probability = simulate_interaction(&p.alice, &p.bob, &p.effect, &p.rounds)?;
    let x = strategy_from_channels(&p.alice, &p.rounds)?;
    let pairing = x.op().inner_real(&co_strategy_functional(&p.bob, &p.effect, &p.rounds)?)?;
    let difference = (probability - pairing).abs();
    Ok(SimulateRecord { probability, pairing, difference, failure: (difference > ctx.tol(1e-10)).then_some(Failure::Identity) })
}
