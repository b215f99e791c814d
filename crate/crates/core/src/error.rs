use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading and validating a case file.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read case file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("unit error in `{field}`: {message}")]
    Unit { field: String, message: String },
    #[error("stream `{stream}` is infeasible: {message}")]
    Infeasible { stream: String, message: String },
}

impl CaseError {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        CaseError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn unit(field: impl Into<String>, message: impl Into<String>) -> Self {
        CaseError::Unit {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Errors raised by the surrogate fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("empty feasible domain: {0}")]
    EmptyDomain(String),
    #[error("no samples to fit")]
    NoSamples,
    #[error("underdetermined fit: {samples} samples for {nodes} nodes")]
    Underdetermined { samples: usize, nodes: usize },
    #[error("grid width {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point {point:?} lies outside the model domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("invalid fit parameter: {0}")]
    InvalidParameter(String),
}

/// Errors raised while lowering the superstructure to a MILP.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no surrogate available for `{0}`")]
    MissingFit(String),
    #[error("nonlinear relation `{0}` has no lowering")]
    Unhoused(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Errors raised by model writers and the solver adapters.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("name collision after sanitizing: `{0}` and `{1}`")]
    NameCollision(String, String),
    #[error("solver executable not found: {0}")]
    NotFound(String),
    #[error("solver failed: {0}")]
    Crashed(String),
    #[error("cannot parse solver output: {0}")]
    Parse(String),
    #[error("solve cancelled")]
    Cancelled,
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

impl SolverError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SolverError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors raised while turning a solver result into a network design.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("solution has status {0:?}; no design to reconstruct")]
    NoSolution(crate::solver::SolveStatus),
    #[error("binary `{name}` = {value} is not integral")]
    Fractional { name: String, value: f64 },
    #[error("missing value for `{0}`")]
    MissingValue(String),
    #[error("exact TAC is zero while the MILP objective is {0}")]
    ZeroExactTac(f64),
}
