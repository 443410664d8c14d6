//! Resolved, type-checked expressions ready for evaluation.

use crate::engine::Value;
use crate::stdlib::Builtin;
use crate::syntax::{Access, BinaryOp};

/// Index of a stream. Inputs come first, then outputs, both in declaration
/// order. The engine extends the range with one node per feedback condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Value),
    Position,
    Present(StreamId),
    Offset {
        stream: StreamId,
        offset: i64,
        default: Box<Expr>,
    },
    Absolute {
        stream: StreamId,
        index: u64,
        /// Index into the pinned slot table.
        slot: usize,
        default: Box<Expr>,
    },
    Call(Builtin, Vec<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Switch {
        scrutinee: Box<Expr>,
        /// Strictly increasing case constants.
        cases: Vec<(Value, Expr)>,
        default: Box<Expr>,
    },
}

impl Expr {
    /// Visits every stream access, including those in branches that may
    /// never be taken.
    pub fn for_each_access(&self, f: &mut dyn FnMut(StreamId, Access)) {
        match self {
            Expr::Const(_) | Expr::Position => {}
            Expr::Present(s) => f(*s, Access::Relative(0)),
            Expr::Offset {
                stream,
                offset,
                default,
            } => {
                f(*stream, Access::Relative(*offset));
                default.for_each_access(f);
            }
            Expr::Absolute {
                stream,
                index,
                default,
                ..
            } => {
                f(*stream, Access::Absolute(*index));
                default.for_each_access(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.for_each_access(f)),
            Expr::Not(e) | Expr::Neg(e) => e.for_each_access(f),
            Expr::Binary(_, l, r) => {
                l.for_each_access(f);
                r.for_each_access(f);
            }
            Expr::If(c, t, e) => {
                c.for_each_access(f);
                t.for_each_access(f);
                e.for_each_access(f);
            }
            Expr::Switch {
                scrutinee,
                cases,
                default,
            } => {
                scrutinee.for_each_access(f);
                cases.iter().for_each(|(_, e)| e.for_each_access(f));
                default.for_each_access(f);
            }
        }
    }
}
