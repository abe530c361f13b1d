use thiserror::Error;

/// Errors raised while building or validating an [`Instance`](crate::Instance).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("arm set is empty")]
    EmptyArmSet,
    #[error("arm {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{what} has dimension {found}, expected {expected}")]
    ParameterDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("arm {index} has norm {norm} above the declared bound {bound}")]
    ArmNormExceeded { index: usize, norm: f64, bound: f64 },
    #[error("{what} has norm {norm} above the declared bound {bound}")]
    ParameterNormExceeded {
        what: &'static str,
        norm: f64,
        bound: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{what} must be {requirement}, got {value}")]
    OutOfRange {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("testing arms are not contained in the span of the training arms")]
    SpanNotCovered,
    #[error("no testing arm satisfies the cost threshold")]
    NoFeasibleArm,
    #[error("best feasible arm is not unique (arms {0} and {1} tie)")]
    NonUniqueBest(usize, usize),
    #[error("invalid instance file: {0}")]
    Format(String),
}

/// Errors from the optimal-design and hardness solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("matrix is not positive definite even after jitter")]
    Singular,
    #[error("training arms span dimension {rank} < {dim}; reduce to their span first")]
    DegenerateDesign { rank: usize, dim: usize },
    #[error("design did not certify within {iterations} iterations (max variance {max_variance}, target {target})")]
    DesignNotCertified {
        iterations: usize,
        max_variance: f64,
        target: f64,
    },
    #[error("hardness solver failed to certify stationarity (best value {best_value}, improvement {improvement})")]
    NotStationary {
        best_value: f64,
        best_weights: Vec<f64>,
        improvement: f64,
    },
    #[error("hardness is undefined for zero noise ({0})")]
    ZeroNoise(&'static str),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

/// Errors surfaced by algorithm runs and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("exponent unresolved: {0}")]
    ExponentUnresolved(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
