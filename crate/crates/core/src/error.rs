use thiserror::Error;

/// Errors produced by the solvers, the filter pipeline and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unstable reference model: matrix is not Hurwitz")]
    UnstableReference,
    #[error("uncontrollable (A, B) pair")]
    Uncontrollable,
    #[error("care diverged after {iterations} Newton iterations")]
    CareDiverged { iterations: usize },
    #[error("rank deficient input matrix")]
    RankDeficient,
    #[error("numerical blowup at t = {t} in block `{block}`")]
    Blowup { t: f64, block: String },
    #[error("insufficient decay window: {usable} usable samples, need at least 10")]
    InsufficientDecayWindow { usable: usize },
    #[error("window [{start}, {end}] outside sampled range [{first}, {last}]")]
    Range {
        start: f64,
        end: f64,
        first: f64,
        last: f64,
    },
    #[error("degenerate excitation: {0} must be positive")]
    DegenerateExcitation(&'static str),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
