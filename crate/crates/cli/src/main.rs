mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use combforge::io::read_json;
use combforge::random::trial_rng;
use combforge::reversal::ReversalMode;
use combforge::sdp::{SolverOptions, DEFAULT_MAX_REAL_DIM};
use combforge::strategies::RoundStructure;
use combforge::{Error, Result};

use commands::Context;
use report::{Format, Health, Reporter};

/// Largest round count and per-factor dimension accepted without
/// `--allow-large`.
const DESK_ROUNDS: usize = 3;
const DESK_DIM: usize = 3;

#[derive(Parser)]
#[command(name = "combforge", version, about = "Optimization over quantum strategies and their time reversals")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    trials: usize,
    /// Number of rounds n.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// One dimension for every factor, or x1,y1,…,xn,yn.
    #[arg(long, global = true, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Pass/fail tolerance of the checked identity.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    sdp_gap_tol: Option<f64>,
    #[arg(long, global = true)]
    sdp_max_iter: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Lift the limits of 3 rounds and dimension 3 per factor.
    #[arg(long, global = true)]
    allow_large: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Maximize,
    Match,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize ⟨H, X⟩ over strategies X.
    Solve {
        /// Hermitian matrix file for H.
        #[arg(long)]
        objective: PathBuf,
        /// Round structure file `[[x_label, x_dim, y_label, y_dim], …]`;
        /// otherwise built from --rounds/--dims.
        #[arg(long)]
        rounds_file: Option<PathBuf>,
    },
    /// Build the time-reversed strategy for a rank-one objective.
    Reverse {
        /// Strategy file; a random strategy when absent.
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Vector file `[[re, im], …]`.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        vector: Option<PathBuf>,
        /// Draw the vector at random.
        #[arg(long)]
        random: bool,
        #[arg(long, value_enum, default_value_t = Mode::Maximize)]
        mode: Mode,
    },
    /// Compare forward and reversed optima for random rank-one objectives.
    Corollary,
    /// Check H_min(X|Y) = −H_max(X|Z) on pure tripartite states.
    Entropy {
        /// Vector file `[[re, im], …]` on X⊗Y⊗Z.
        #[arg(long, conflicts_with = "random_pure", required_unless_present = "random_pure")]
        state: Option<PathBuf>,
        #[arg(long)]
        random_pure: bool,
        /// The factor playing the role of X.
        #[arg(long, default_value = "X")]
        cut: String,
    },
    /// Search random objectives for differing forward and reversed optima.
    Counterexample,
    /// Compare an interaction's outcome probability with ⟨P, X⟩.
    Simulate {
        /// Protocol file with `rounds`, `alice`, `bob` and `effect`.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        protocol: Option<PathBuf>,
        #[arg(long)]
        random: bool,
    },
}

fn round_structure(c: &Common, default_n: usize, default_dims: &[usize]) -> Result<RoundStructure> {
    let n = c.rounds.unwrap_or(default_n);
    let dims = c.dims.clone().unwrap_or_else(|| default_dims.to_vec());
    let pairs: Vec<(usize, usize)> = match dims.len() {
        1 => vec![(dims[0], dims[0]); n],
        l if l == 2 * n => dims.chunks(2).map(|p| (p[0], p[1])).collect(),
        l => return Err(Error::InvalidInput(format!("--dims needs 1 or {} values, got {l}", 2 * n))),
    };
    RoundStructure::from_dims(&pairs)
}

fn check_desk(c: &Common, rounds: &RoundStructure) -> Result<()> {
    if c.allow_large {
        return Ok(());
    }
    let big = rounds.rounds().iter().any(|r| r.x_dim > DESK_DIM || r.y_dim > DESK_DIM);
    if rounds.len() > DESK_ROUNDS || big {
        return Err(Error::InvalidInput(format!(
            "{} rounds with dims {:?} exceeds {DESK_ROUNDS} rounds of dimension ≤ {DESK_DIM}; pass --allow-large",
            rounds.len(),
            rounds.rounds().iter().map(|r| (r.x_dim, r.y_dim)).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

fn context(c: &Common) -> Result<Context> {
    let mut opts = SolverOptions::default();
    if let Some(g) = c.sdp_gap_tol {
        opts.gap_tol = g;
    }
    if let Some(m) = c.sdp_max_iter {
        opts.max_iter = m;
    }
    opts.max_real_dim = match std::env::var("COMBFORGE_MAX_DIM") {
        Ok(v) => v.parse().map_err(|_| Error::InvalidInput(format!("COMBFORGE_MAX_DIM={v} is not a size")))?,
        Err(_) => DEFAULT_MAX_REAL_DIM,
    };
    if c.trials == 0 {
        return Err(Error::InvalidInput("--trials must be at least 1".into()));
    }
    if c.dims.as_ref().is_some_and(|d| d.contains(&0)) {
        return Err(Error::InvalidInput("dimensions must be at least 1".into()));
    }
    for t in [c.tol, c.sdp_gap_tol].into_iter().flatten() {
        if !(t > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
    }
    let health = Health { gap: 1e-7_f64.max(opts.gap_tol), primal_eq: 1e-8, weak_duality: 1e-9 };
    Ok(Context { opts, health, tol: c.tol })
}

fn run(cli: Cli) -> Result<i32> {
    let c = &cli.common;
    let ctx = context(c)?;
    let name = match &cli.command {
        Command::Solve { .. } => "solve",
        Command::Reverse { .. } => "reverse",
        Command::Corollary => "corollary",
        Command::Entropy { .. } => "entropy",
        Command::Counterexample => "counterexample",
        Command::Simulate { .. } => "simulate",
    };
    let reporter = Reporter { command: name.into(), seed: c.seed, format: c.format, out: c.out.clone() };
    let io = |r: std::io::Result<i32>| r.map_err(|e| Error::InvalidInput(e.to_string()));
    match &cli.command {
        Command::Solve { objective, rounds_file } => {
            let rounds = match rounds_file {
                Some(p) => read_json(p)?,
                None => round_structure(c, 1, &[2])?,
            };
            check_desk(c, &rounds)?;
            io(reporter.campaign(1, |_| commands::solve(&ctx, objective, &rounds)))
        }
        Command::Reverse { strategy, vector, mode, .. } => {
            let rounds = match strategy {
                Some(p) => read_json::<combforge::strategies::StrategyOperator>(p)?.rounds().clone(),
                None => round_structure(c, 1, &[2])?,
            };
            check_desk(c, &rounds)?;
            let mode = match mode {
                Mode::Maximize => ReversalMode::Maximize,
                Mode::Match => ReversalMode::Match,
            };
            let trials = if vector.is_some() && strategy.is_some() { 1 } else { c.trials };
            io(reporter.campaign(trials, |t| {
                commands::reverse(&ctx, &rounds, strategy.as_deref(), vector.as_deref(), mode, c.seed, t)
            }))
        }
        Command::Corollary => {
            let rounds = round_structure(c, 1, &[2])?;
            check_desk(c, &rounds)?;
            io(reporter.campaign(c.trials, |t| commands::corollary(&ctx, &rounds, c.seed, t)))
        }
        Command::Entropy { state, cut, .. } => {
            let d = c.dims.clone().unwrap_or_else(|| vec![2, 2, 2]);
            let dims: [usize; 3] = d
                .try_into()
                .map_err(|d: Vec<usize>| Error::InvalidInput(format!("entropy needs --dims dX,dY,dZ, got {} values", d.len())))?;
            if !c.allow_large && dims.iter().any(|&d| d > DESK_DIM) {
                return Err(Error::InvalidInput(format!("dims {dims:?} exceed {DESK_DIM}; pass --allow-large")));
            }
            let trials = if state.is_some() { 1 } else { c.trials };
            io(reporter.campaign(trials, |t| commands::entropy(&ctx, dims, state.as_deref(), cut, c.seed, t)))
        }
        Command::Counterexample => {
            let rounds = round_structure(c, 1, &[2])?;
            check_desk(c, &rounds)?;
            let trials = if c.trials == 1 { 1000 } else { c.trials };
            io(reporter.campaign(1, |_| commands::counterexample(&ctx, &rounds, c.seed, trials)))
        }
        Command::Simulate { protocol, .. } => {
            let file: Option<commands::Protocol> = protocol.as_ref().map(|p| read_json(p)).transpose()?;
            let rounds = match &file {
                Some(p) => p.rounds.clone(),
                None => round_structure(c, 3, &[2])?,
            };
            check_desk(c, &rounds)?;
            let trials = if file.is_some() { 1 } else { c.trials };
            io(reporter.campaign(trials, |t| match &file {
                Some(p) => commands::simulate(&ctx, p),
                None => commands::simulate(&ctx, &commands::random_protocol(&rounds, &mut trial_rng(c.seed, t))?),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
