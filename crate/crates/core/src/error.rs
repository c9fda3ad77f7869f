use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("primitive set has no terminals")]
    EmptyPrimitiveSet,
    #[error("invalid primitive set: {0}")]
    InvalidPrimitiveSet(String),
    #[error("invalid height range [{min}, {max}]")]
    InvalidHeightRange { min: usize, max: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("individual has not been evaluated")]
    UnevaluatedIndividual,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("too few zero crossings ({0}) to measure a frequency")]
    TooFewCrossings(usize),
    #[error("degenerate signal on channel {0}")]
    DegenerateSignal(usize),
    #[error("trajectory diverged")]
    Diverged,
    #[error("zero amplitude in averaged system")]
    ZeroAmplitude,
    #[error("Newton iteration did not converge")]
    NoConvergence,
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
