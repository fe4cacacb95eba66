use thiserror::Error;

use crate::scenarios::format::ParseDiagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("conditional undefined: divisor magnitude {magnitude:e} is at or below {tolerance:e}")]
    DivisorZero { magnitude: f64, tolerance: f64 },

    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),

    #[error("state space must contain at least one label")]
    Empty,

    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    #[error("kernels are defined over different state spaces")]
    SpaceMismatch,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("kernel steps differ ({left} vs {right})")]
    StepMismatch { left: f64, right: f64 },

    #[error("kernel step must be positive and finite, got {0}")]
    NonPositiveStep(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("row sum law violated: {0}")]
    RowSumViolation(String),

    #[error("path enumeration too large: {steps} steps over {dimension} states")]
    TooLarge { steps: usize, dimension: usize },

    #[error("time index {index} is beyond chain length {len}")]
    TimeOutOfRange { index: usize, len: usize },

    #[error("proposition must name at least one state")]
    EmptyProposition,

    #[error("no frequency prediction: total squared magnitude {0:e} is degenerate")]
    DegenerateDenominator(f64),

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("singular weight matrix: {0}")]
    SingularW(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("singular moment table: {0}")]
    SingularMoments(String),

    #[error("wave packet weight {weight:.3e} within the boundary band exceeds {limit:.0e}")]
    BoundaryContamination { weight: f64, limit: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParameterRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("degenerate kernel row: {0}")]
    DegenerateRow(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("{}", format_diagnostics(.0))]
    Parse(Vec<ParseDiagnostic>),
}

fn format_diagnostics(diags: &[ParseDiagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
