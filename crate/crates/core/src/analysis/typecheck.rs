//! Type checking and lowering to [`ir::Expr`](super::ir::Expr).
//!
//! Arithmetic is closed over `int` and `double` separately; there is no
//! implicit coercion. The single exception: an integer literal written as
//! the default of an offset into a `double` stream is read as a double
//! (`dev_sum[-1, 0]`).

use std::collections::HashMap;

use thiserror::Error;

use super::ir::{self, StreamId};
use crate::engine::Value;
use crate::stdlib::{self, CallError};
use crate::syntax::{
    BinaryOp, Expr, ExprKind, FeedbackKind, Literal, Span, Specification, StreamKind, StreamType,
    UnaryOp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("{span}: expected {expected}, found {found}{}", context.map(|c| format!(" (required by {c})")).unwrap_or_default())]
    Mismatch {
        expected: String,
        found: StreamType,
        span: Span,
        /// Location of the construct imposing the expectation.
        context: Option<Span>,
    },
    #[error("{span}: {error}")]
    Call { error: CallError, span: Span },
    #[error("{span}: operator `{op}` cannot combine {lhs} and {rhs}")]
    Operands {
        op: &'static str,
        lhs: StreamType,
        rhs: StreamType,
        span: Span,
    },
    #[error(
        "{span}: branches have different types {then} and {otherwise} (other branch at {other})"
    )]
    Branches {
        then: StreamType,
        otherwise: StreamType,
        span: Span,
        other: Span,
    },
    #[error("{span}: unknown stream `{name}`")]
    UnknownStream { name: String, span: Span },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamInfo {
    pub name: String,
    pub ty: StreamType,
    pub kind: StreamKind,
}

/// A feedback declaration with its condition lowered.
#[derive(Debug, Clone, PartialEq)]
pub struct Observer {
    pub kind: FeedbackKind,
    pub condition: ir::Expr,
    pub message: String,
    /// `(source, target column)` pairs for tags.
    pub bindings: Vec<(StreamId, String)>,
    pub location: Option<String>,
}

/// Output of a successful type check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedSpec {
    pub streams: Vec<StreamInfo>,
    pub num_inputs: usize,
    /// Indexed by stream id; `None` for inputs.
    pub definitions: Vec<Option<ir::Expr>>,
    pub observers: Vec<Observer>,
    /// Distinct `(stream, index)` pairs accessed with `#[index, _]`.
    pub pinned: Vec<(StreamId, u64)>,
}

impl CheckedSpec {
    pub fn id(&self, name: &str) -> Option<StreamId> {
        self.streams
            .iter()
            .position(|s| s.name == name)
            .map(StreamId)
    }

    pub fn name(&self, id: StreamId) -> &str {
        &self.streams[id.0].name
    }

    pub fn type_table(&self) -> Vec<(String, StreamType)> {
        self.streams
            .iter()
            .map(|s| (s.name.clone(), s.ty))
            .collect()
    }
}

/// Computes the type of every stream, checking all definitions and
/// feedback conditions. Expects a desugared specification.
pub fn type_check(spec: &Specification) -> Result<Vec<(String, StreamType)>, TypeError> {
    lower(spec).map(|c| c.type_table())
}

/// Type checks and lowers a desugared specification.
pub fn lower(spec: &Specification) -> Result<CheckedSpec, TypeError> {
    let streams: Vec<StreamInfo> = spec
        .streams()
        .map(|d| StreamInfo {
            name: d.name.clone(),
            ty: d.ty,
            kind: d.kind,
        })
        .collect();
    let mut lowering = Lowering {
        ids: streams
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), StreamId(i)))
            .collect(),
        streams: &streams,
        pinned: Vec::new(),
    };
    let mut definitions = vec![None; spec.inputs.len()];
    for decl in &spec.outputs {
        let def = decl
            .definition
            .as_ref()
            .expect("output streams carry a definition");
        let lowered = lowering.expect(def, decl.ty, Some(decl.span))?;
        definitions.push(Some(lowered));
    }
    let mut observers = Vec::new();
    for fb in &spec.feedback {
        let condition = lowering.expect(&fb.condition, StreamType::Bool, Some(fb.span))?;
        let bindings = fb
            .bindings
            .iter()
            .map(|b| {
                lowering
                    .stream(&b.source, fb.span)
                    .map(|id| (id, b.target.clone()))
            })
            .collect::<Result<_, _>>()?;
        observers.push(Observer {
            kind: fb.kind,
            condition,
            message: fb.effective_message().to_string(),
            bindings,
            location: fb.location.clone(),
        });
    }
    let pinned = lowering.pinned;
    Ok(CheckedSpec {
        num_inputs: spec.inputs.len(),
        streams,
        definitions,
        observers,
        pinned,
    })
}

struct Lowering<'a> {
    ids: HashMap<&'a str, StreamId>,
    streams: &'a [StreamInfo],
    pinned: Vec<(StreamId, u64)>,
}

fn mismatch(
    expected: impl Into<String>,
    found: StreamType,
    span: Span,
    context: Option<Span>,
) -> TypeError {
    TypeError::Mismatch {
        expected: expected.into(),
        found,
        span,
        context,
    }
}

/// An integer literal, possibly negated.
fn int_literal(expr: &Expr) -> Option<i64> {
    match &expr.kind {
        ExprKind::Lit(Literal::Int(v)) => Some(*v),
        ExprKind::Unary {
            op: UnaryOp::Neg,
            operand,
        } => int_literal(operand).map(|v| -v),
        _ => None,
    }
}

impl<'a> Lowering<'a> {
    fn stream(&self, name: &str, span: Span) -> Result<StreamId, TypeError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| TypeError::UnknownStream {
                name: name.to_string(),
                span,
            })
    }

    fn expect(
        &mut self,
        expr: &Expr,
        ty: StreamType,
        context: Option<Span>,
    ) -> Result<ir::Expr, TypeError> {
        let (lowered, found) = self.expr(expr)?;
        if found != ty {
            return Err(mismatch(ty.name(), found, expr.span, context));
        }
        Ok(lowered)
    }

    fn default_for(
        &mut self,
        default: &Expr,
        ty: StreamType,
        access: Span,
    ) -> Result<ir::Expr, TypeError> {
        if ty == StreamType::Double {
            if let Some(v) = int_literal(default) {
                return Ok(ir::Expr::Const(Value::Double(v as f64)));
            }
        }
        self.expect(default, ty, Some(access))
    }

    fn expr(&mut self, expr: &Expr) -> Result<(ir::Expr, StreamType), TypeError> {
        let span = expr.span;
        Ok(match &expr.kind {
            ExprKind::Lit(lit) => (ir::Expr::Const(Value::from(lit)), Value::from(lit).ty()),
            ExprKind::Keyword(kw) => {
                let ty = stdlib::keyword_type(*kw);
                match stdlib::keyword_value(*kw) {
                    Some(v) => (ir::Expr::Const(v), ty),
                    None => (ir::Expr::Position, ty),
                }
            }
            ExprKind::Access {
                stream,
                offset,
                default,
            } => {
                let id = self.stream(stream, span)?;
                let ty = self.streams[id.0].ty;
                match default {
                    None => (ir::Expr::Present(id), ty),
                    Some(d) => {
                        let default = self.default_for(d, ty, span)?;
                        (
                            ir::Expr::Offset {
                                stream: id,
                                offset: *offset,
                                default: Box::new(default),
                            },
                            ty,
                        )
                    }
                }
            }
            ExprKind::Absolute {
                stream,
                index,
                default,
            } => {
                let id = self.stream(stream, span)?;
                let ty = self.streams[id.0].ty;
                let default = self.default_for(default, ty, span)?;
                let slot = match self.pinned.iter().position(|p| *p == (id, *index)) {
                    Some(slot) => slot,
                    None => {
                        self.pinned.push((id, *index));
                        self.pinned.len() - 1
                    }
                };
                (
                    ir::Expr::Absolute {
                        stream: id,
                        index: *index,
                        slot,
                        default: Box::new(default),
                    },
                    ty,
                )
            }
            ExprKind::Call { name, args } => {
                let mut lowered = Vec::with_capacity(args.len());
                let mut types = Vec::with_capacity(args.len());
                for a in args {
                    let (e, t) = self.expr(a)?;
                    lowered.push(e);
                    types.push(t);
                }
                let sig = stdlib::resolve(name, &types)
                    .map_err(|error| TypeError::Call { error, span })?;
                (ir::Expr::Call(sig.builtin, lowered), sig.ret)
            }
            ExprKind::Unary { op, operand } => {
                let (e, t) = self.expr(operand)?;
                match (op, t) {
                    (UnaryOp::Not, StreamType::Bool) => (ir::Expr::Not(Box::new(e)), t),
                    (UnaryOp::Not, _) => return Err(mismatch("bool", t, operand.span, Some(span))),
                    (UnaryOp::Neg, StreamType::Int | StreamType::Double) => {
                        // fold negated literals so `-1` is a constant
                        let folded = match e {
                            ir::Expr::Const(Value::Int(v)) if v != i64::MIN => {
                                ir::Expr::Const(Value::Int(-v))
                            }
                            ir::Expr::Const(Value::Double(v)) => ir::Expr::Const(Value::Double(-v)),
                            e => ir::Expr::Neg(Box::new(e)),
                        };
                        (folded, t)
                    }
                    (UnaryOp::Neg, _) => {
                        return Err(mismatch("int or double", t, operand.span, Some(span)))
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, lt) = self.expr(lhs)?;
                let (r, rt) = self.expr(rhs)?;
                let bad = || TypeError::Operands {
                    op: op.symbol(),
                    lhs: lt,
                    rhs: rt,
                    span,
                };
                if lt != rt {
                    return Err(bad());
                }
                let numeric = matches!(lt, StreamType::Int | StreamType::Double);
                let ty = match op {
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div if numeric => lt,
                    BinaryOp::Pow if lt == StreamType::Double => lt,
                    BinaryOp::Eq | BinaryOp::Ne => StreamType::Bool,
                    BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge if numeric => {
                        StreamType::Bool
                    }
                    BinaryOp::And | BinaryOp::Or if lt == StreamType::Bool => lt,
                    _ => return Err(bad()),
                };
                (ir::Expr::Binary(*op, Box::new(l), Box::new(r)), ty)
            }
            ExprKind::If {
                cond,
                then,
                elifs,
                otherwise,
            } => {
                debug_assert!(elifs.is_empty(), "lowering expects desugared input");
                let c = self.expect(cond, StreamType::Bool, Some(span))?;
                let (t, tt) = self.expr(then)?;
                let (e, et) = self.expr(otherwise)?;
                if tt != et {
                    return Err(TypeError::Branches {
                        then: tt,
                        otherwise: et,
                        span: then.span,
                        other: otherwise.span,
                    });
                }
                (ir::Expr::If(Box::new(c), Box::new(t), Box::new(e)), tt)
            }
            ExprKind::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let (s, st) = self.expr(scrutinee)?;
                if !matches!(st, StreamType::Int | StreamType::Double) {
                    return Err(mismatch("int or double", st, scrutinee.span, Some(span)));
                }
                let (d, dt) = self.expr(default)?;
                let mut lowered = Vec::with_capacity(cases.len());
                for (lit, body) in cases {
                    let key = Value::from(lit);
                    if key.ty() != st {
                        return Err(mismatch(
                            st.name(),
                            key.ty(),
                            body.span,
                            Some(scrutinee.span),
                        ));
                    }
                    let (b, bt) = self.expr(body)?;
                    if bt != dt {
                        return Err(TypeError::Branches {
                            then: bt,
                            otherwise: dt,
                            span: body.span,
                            other: default.span,
                        });
                    }
                    lowered.push((key, b));
                }
                (
                    ir::Expr::Switch {
                        scrutinee: Box::new(s),
                        cases: lowered,
                        default: Box::new(d),
                    },
                    dt,
                )
            }
        })
    }
}
