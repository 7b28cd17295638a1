use thiserror::Error;

use crate::channel::StationId;

/// Failures while parsing textual inputs (decimals, traces, config files).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid decimal {0:?} (expected at most 6 fractional digits)")]
    Decimal(String),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("unknown algorithm {0:?}")]
    Algorithm(String),
    #[error("unknown adversary {0:?}")]
    Adversary(String),
    #[error("unknown theorem {0:?}")]
    Theorem(String),
    #[error("invalid value for {key}: {value:?}")]
    Value { key: String, value: String },
    #[error("unknown config key {0:?}")]
    Key(String),
}

/// Errors raised while setting up or driving an execution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(
        "adversary activated {activated} passive stations in round {round} (bound k = {bound})"
    )]
    ActivationBoundViolated {
        round: u64,
        activated: usize,
        bound: usize,
    },
    #[error("algorithm {algorithm} is incompatible: {reason}")]
    IncompatibleAlgorithm { algorithm: String, reason: String },
    #[error("trace exhausted: no entry for round {round} ({len} rounds available)")]
    TraceExhausted { round: u64, len: usize },
    #[error("station {station} violated the protocol contract in round {round}: {reason}")]
    ProtocolViolation {
        station: StationId,
        round: u64,
        reason: String,
    },
    #[error("invariant violated in round {round}: {reason}")]
    InvariantViolated { round: u64, reason: String },
    #[error("bound {theorem} is not applicable: {reason}")]
    OutOfRange { theorem: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
