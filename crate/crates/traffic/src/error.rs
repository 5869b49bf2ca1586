use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrafficError {
    #[error("malformed network spec: line {line}: {reason}")]
    MalformedSpec { line: usize, reason: String },

    #[error("no route from ({}, {}) to ({}, {})", from.0, from.1, to.0, to.1)]
    UnreachablePair { from: (i64, i64), to: (i64, i64) },

    #[error("malformed scenario: {0}")]
    MalformedScenario(String),

    #[error("not a traffic run: {0}")]
    NotATrafficRun(String),

    #[error("malformed driver action: {0}")]
    MalformedAction(String),
}

pub type Result<T, E = TrafficError> = std::result::Result<T, E>;

impl From<TrafficError> for standin::Error {
    fn from(e: TrafficError) -> Self {
        standin::Error::DomainViolation(e.to_string())
    }
}
