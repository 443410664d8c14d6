//! Specification syntax: tokens, AST, parsing, desugaring, printing and merging.

pub mod ast;
mod desugar;
mod error;
pub mod lexer;
mod merge;
mod parser;
mod pretty;

pub use ast::*;
pub use desugar::desugar;
pub use error::{MergeError, ParseError};
pub use lexer::{tokenize, Token, TokenKind};
pub use merge::merge_specifications;
pub use parser::parse_specification;
pub(crate) use pretty::quote;
pub use pretty::{pretty_expr, pretty_specification};
