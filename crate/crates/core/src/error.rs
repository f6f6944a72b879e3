use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("label `{0}` appears more than once")]
    LabelCollision(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("target order is not a permutation of the layout labels")]
    NotAPermutation,
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("columns are not orthonormal (Gram residual {0:e})")]
    NotOrthonormal(f64),
    #[error("channel invariant violated: {0}")]
    InvalidChannel(String),
    #[error("strategy constraint {round} violated: residual {residual:e}")]
    StrategyConstraint { round: usize, residual: f64 },
    #[error("strategy hierarchy is missing")]
    MissingHierarchy,
    #[error("numerical rank failure (singular-value gap {gap:e})")]
    RankFailure { gap: f64 },
    #[error("effect operator is not between 0 and I (eigenvalue {0:e})")]
    InvalidEffect(f64),
    #[error("target value {target:e} outside reachable range [{low:e}, {high:e}]")]
    MatchInfeasible { target: f64, low: f64, high: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("problem size {size} exceeds the configured cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
