use thiserror::Error;

use crate::term::Var;

/// Failures raised by the engine operations (matching, saturation,
/// transition application, replay).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("bad duration literal {0:?}")]
    BadDuration(String),
    #[error("non-finite number")]
    NonFinite,
    #[error("fact must be ground, found variable {0}")]
    NotGround(Var),
    #[error("guard references unbound variable {0}")]
    GuardUnbound(Var),
    #[error("{op} expects numbers, got {found}")]
    TypeMismatch { op: &'static str, found: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable {0} is not bound")]
    UnboundVariable(Var),
    #[error("derived fact count exceeded the cap of {cap}")]
    FixpointOverflow { cap: usize },
    #[error("transition {action} is not applicable with the given binding")]
    NotApplicable { action: String },
    #[error("transition {action} is not in progress")]
    NotInTransition { action: String },
    #[error("path no longer replays from the given state: step {step} ({action})")]
    TraceMismatch { step: usize, action: String },
    #[error("all steps of the pathway have been executed")]
    CursorExhausted,
    #[error("unknown transition {map} / {action}")]
    UnknownTransition { map: String, action: String },
}
