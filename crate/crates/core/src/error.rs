use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular gradient: operator undefined at xi = {0:?}")]
    SingularGradient(Vec<f64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no interior stencil at boundary node {0}")]
    NoInteriorStencil(usize),

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("CFL violation: dt = {dt:e} exceeds stable limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("blow-up: non-finite value at node {node} (t = {time})")]
    BlowUp { node: usize, time: f64 },

    #[error("step budget of {0} exceeded before reaching the horizon")]
    BudgetExceeded(usize),

    #[error("case not applicable: {0}")]
    CaseNotApplicable(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("only {kept} gaps lie above {factor}× the error floor {floor:e}; at least 3 are needed to fit")]
    BelowFloor {
        kept: usize,
        factor: f64,
        floor: f64,
    },

    #[error("field is flat; Hölder exponent undefined")]
    Flat,

    #[error("fit carries no theoretical exponent to compare against")]
    MissingTheory,

    #[error("sweep failed at perturbation {value}: {source}")]
    SweepFailed {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::CflViolation { .. }
            | Error::BlowUp { .. }
            | Error::BudgetExceeded(_)
            | Error::BelowFloor { .. } => true,
            Error::SweepFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
