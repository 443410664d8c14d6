use thiserror::Error;

/// Failure of a single arithmetic operation or builtin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ArithmeticError {
    #[error("integer overflow")]
    IntOverflow,
    #[error("integer division by zero")]
    DivisionByZero,
    #[error("value not representable as int")]
    InvalidCast,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{error} while evaluating `{stream}` at position {position}")]
    Runtime {
        stream: String,
        position: u64,
        error: ArithmeticError,
    },
    #[error("expected event for position {expected}, got {found}")]
    PositionMismatch { expected: u64, found: u64 },
    #[error("event is missing a value for input `{0}`")]
    MissingInput(String),
    #[error("input `{name}` expects {expected} but got {found}")]
    InputType {
        name: String,
        expected: crate::syntax::StreamType,
        found: crate::syntax::StreamType,
    },
    #[error("event for position {position} has {found} values, expected {expected}")]
    EventArity {
        position: u64,
        expected: usize,
        found: usize,
    },
    #[error("monitor already finalized")]
    Finalized,
    #[error("`{stream}` at position {position} depends on itself")]
    Circular { stream: String, position: u64 },
}
