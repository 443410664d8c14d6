use thiserror::Error;

use super::ast::Span;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{span}: lexical error: {message}")]
    Lexical { span: Span, message: String },
    #[error("{span}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: {message}")]
    Invalid { span: Span, message: String },
    #[error("{second}: stream `{name}` already declared at {first}")]
    DuplicateStream {
        name: String,
        first: Span,
        second: Span,
    },
    #[error("{span}: reference to undeclared stream `{name}`")]
    UndeclaredStream { name: String, span: Span },
}

impl ParseError {
    pub(crate) fn lexical(span: Span, message: impl Into<String>) -> ParseError {
        ParseError::Lexical {
            span,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(span: Span, message: impl Into<String>) -> ParseError {
        ParseError::Invalid {
            span,
            message: message.into(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            ParseError::Lexical { span, .. }
            | ParseError::Syntax { span, .. }
            | ParseError::Invalid { span, .. }
            | ParseError::UndeclaredStream { span, .. } => *span,
            ParseError::DuplicateStream { second, .. } => *second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("nothing to merge")]
    Empty,
    #[error("conflicting declarations of `{name}`: {reason}")]
    Conflict { name: String, reason: String },
}
