use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use combforge::sdp::SdpSolution;
use combforge::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Text,
}

/// Failure classes, most severe first. Each maps to its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Error,
    Feasibility,
    Gap,
    Identity,
}

impl Failure {
    pub fn exit_code(self) -> i32 {
        match self {
            Failure::Error => 1,
            Failure::Feasibility => 3,
            Failure::Gap => 4,
            Failure::Identity => 5,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Solver(_) => Failure::Gap,
            Error::StrategyConstraint { .. } | Error::NotPsd(_) | Error::InvalidChannel(_) => Failure::Feasibility,
            _ => Failure::Error,
        }
    }
}

/// Thresholds every SDP in a report must meet.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Health {
    pub gap: f64,
    pub primal_eq: f64,
    pub weak_duality: f64,
}

impl Health {
    pub fn check(&self, sols: &[&SdpSolution]) -> bool {
        sols.iter().all(|s| {
            s.is_optimal()
                && s.gap <= self.gap
                && s.residuals.primal_eq <= self.primal_eq
                && s.weak_duality_violation <= self.weak_duality
        })
    }
}

pub trait Record: Serialize + Send {
    /// Name of the quantity summarized as the worst value over trials.
    const METRIC: &'static str;
    fn metric(&self) -> f64;
    fn failure(&self) -> Option<Failure>;
    fn text(&self) -> String;
}

#[derive(Serialize)]
struct Header<'a> {
    r#type: &'static str,
    command: &'a str,
    version: &'static str,
    seed: u64,
    trials: usize,
    timestamp: u64,
}

#[derive(Serialize)]
struct TrialLine<'a, R> {
    r#type: &'static str,
    trial: usize,
    pass: bool,
    failure: Option<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    record: Option<&'a R>,
}

#[derive(Serialize)]
struct Summary<'a> {
    r#type: &'static str,
    trials: usize,
    passed: usize,
    feasibility_failures: usize,
    gap_failures: usize,
    identity_failures: usize,
    errors: usize,
    metric: &'a str,
    worst: f64,
}

pub struct Reporter {
    pub command: String,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Reporter {
    /// Runs `trials` independent trials in parallel, writes the report in
    /// trial order and returns the exit code.
    pub fn campaign<R: Record>(&self, trials: usize, run: impl Fn(u64) -> combforge::Result<R> + Sync) -> std::io::Result<i32> {
        let results: Vec<combforge::Result<R>> = (0..trials as u64).into_par_iter().map(&run).collect();
        self.write(trials, &results)
    }

    fn write<R: Record>(&self, trials: usize, results: &[combforge::Result<R>]) -> std::io::Result<i32> {
        let mut sink: Box<dyn Write> = match &self.out {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let header = Header {
            r#type: "header",
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            trials,
            timestamp,
        };
        match self.format {
            Format::Json => writeln!(sink, "{}", to_line(&header))?,
            Format::Text => writeln!(sink, "combforge {} {} seed {} trials {trials}", header.version, self.command, self.seed)?,
        }
        let mut counts = [0usize; 4];
        let mut passed = 0;
        let mut worst: f64 = 0.0;
        let mut worst_failure: Option<Failure> = None;
        for (i, res) in results.iter().enumerate() {
            let (failure, error, record) = match res {
                Ok(r) => {
                    worst = worst.max(r.metric());
                    (r.failure(), None, Some(r))
                }
                Err(e) => (Some(Failure::of_error(e)), Some(e.to_string()), None),
            };
            match failure {
                Some(f) => {
                    counts[f as usize] += 1;
                    worst_failure = Some(worst_failure.map_or(f, |w| w.min(f)));
                }
                None => passed += 1,
            }
            match self.format {
                Format::Json => {
                    let line = TrialLine { r#type: "trial", trial: i, pass: failure.is_none(), failure, error: error.clone(), record };
                    writeln!(sink, "{}", to_line(&line))?;
                }
                Format::Text => {
                    let verdict = match failure {
                        None => "pass".to_string(),
                        Some(f) => format!("FAIL ({f:?})").to_lowercase(),
                    };
                    let body = record.map(|r| r.text()).or(error).unwrap_or_default();
                    writeln!(sink, "trial {i:>4} {verdict:<20} {body}")?;
                }
            }
        }
        let summary = Summary {
            r#type: "summary",
            trials,
            passed,
            errors: counts[Failure::Error as usize],
            feasibility_failures: counts[Failure::Feasibility as usize],
            gap_failures: counts[Failure::Gap as usize],
            identity_failures: counts[Failure::Identity as usize],
            metric: R::METRIC,
            worst,
        };
        match self.format {
            Format::Json => writeln!(sink, "{}", to_line(&summary))?,
            Format::Text => writeln!(
                sink,
                "{passed}/{trials} passed; worst {} {worst:.3e}; failures: {} feasibility, {} gap, {} identity, {} errors",
                R::METRIC,
                summary.feasibility_failures,
                summary.gap_failures,
                summary.identity_failures,
                summary.errors
            )?,
        }
        sink.flush()?;
        Ok(worst_failure.map_or(0, Failure::exit_code))
    }
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"type\":\"error\",\"error\":\"{e}\"}}"))
}
