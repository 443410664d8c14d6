//! Rewrites abbreviations into the core language.
//!
//! - `const T s := a` becomes `output T s := a`
//! - `ite(c, a, b)` becomes `if c { a } else { b }`
//! - `elif` chains become nested `if`/`else`
//! - `filter` becomes `tag` with identical source and target names
//!
//! `switch` stays a core construct: its short-circuit evaluation is not the
//! same as a chain of nested conditionals.

use super::ast::*;

pub fn desugar(mut spec: Specification) -> Specification {
    for decl in &mut spec.outputs {
        decl.constant = false;
        if let Some(def) = decl.definition.take() {
            decl.definition = Some(desugar_expr(def));
        }
    }
    let inputs: Vec<String> = spec.inputs.iter().map(|d| d.name.clone()).collect();
    for fb in &mut spec.feedback {
        let condition = std::mem::replace(
            &mut fb.condition,
            Expr::new(ExprKind::Lit(Literal::Bool(true)), fb.span),
        );
        fb.condition = desugar_expr(condition);
        if fb.kind == FeedbackKind::Filter {
            fb.kind = FeedbackKind::Tag;
            if fb.bindings.is_empty() {
                fb.bindings = inputs
                    .iter()
                    .map(|name| TagBinding {
                        source: name.clone(),
                        target: name.clone(),
                    })
                    .collect();
            }
        }
    }
    spec
}

fn boxed(e: Expr) -> Box<Expr> {
    Box::new(desugar_expr(e))
}

fn desugar_expr(expr: Expr) -> Expr {
    let span = expr.span;
    let kind = match expr.kind {
        k @ (ExprKind::Lit(_) | ExprKind::Keyword(_)) => k,
        ExprKind::Access {
            stream,
            offset,
            default,
        } => ExprKind::Access {
            stream,
            offset,
            default: default.map(|d| boxed(*d)),
        },
        ExprKind::Absolute {
            stream,
            index,
            default,
        } => ExprKind::Absolute {
            stream,
            index,
            default: boxed(*default),
        },
        ExprKind::Call { name, args } if name == "ite" && args.len() == 3 => {
            let mut it = args.into_iter();
            let (c, a, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            ExprKind::If {
                cond: boxed(c),
                then: boxed(a),
                elifs: Vec::new(),
                otherwise: boxed(b),
            }
        }
        ExprKind::Call { name, args } => ExprKind::Call {
            name,
            args: args.into_iter().map(desugar_expr).collect(),
        },
        ExprKind::Unary { op, operand } => ExprKind::Unary {
            op,
            operand: boxed(*operand),
        },
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op,
            lhs: boxed(*lhs),
            rhs: boxed(*rhs),
        },
        ExprKind::If {
            cond,
            then,
            elifs,
            otherwise,
        } => {
            // fold from the last branch outwards
            let mut tail = desugar_expr(*otherwise);
            for (c, e) in elifs.into_iter().rev() {
                let span = c.span;
                tail = Expr::new(
                    ExprKind::If {
                        cond: boxed(c),
                        then: boxed(e),
                        elifs: Vec::new(),
                        otherwise: Box::new(tail),
                    },
                    span,
                );
            }
            ExprKind::If {
                cond: boxed(*cond),
                then: boxed(*then),
                elifs: Vec::new(),
                otherwise: Box::new(tail),
            }
        }
        ExprKind::Switch {
            scrutinee,
            cases,
            default,
        } => ExprKind::Switch {
            scrutinee: boxed(*scrutinee),
            cases: cases
                .into_iter()
                .map(|(lit, e)| (lit, desugar_expr(e)))
                .collect(),
            default: boxed(*default),
        },
    };
    Expr::new(kind, span)
}
