//! Canonical source printer. `parse(pretty(s))` is structurally equal to `s`.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_specification(spec: &Specification) -> String {
    let mut out = String::new();
    for decl in &spec.inputs {
        let _ = writeln!(out, "input {} {}", decl.ty, decl.name);
    }
    for decl in &spec.outputs {
        let keyword = if decl.constant { "const" } else { "output" };
        let def = decl
            .definition
            .as_ref()
            .map(pretty_expr)
            .unwrap_or_default();
        let _ = writeln!(out, "{keyword} {} {} := {def}", decl.ty, decl.name);
    }
    for fb in &spec.feedback {
        out.push_str(&pretty_feedback(fb));
        out.push('\n');
    }
    out
}

fn pretty_feedback(fb: &FeedbackDecl) -> String {
    let cond = pretty_expr(&fb.condition);
    let sources = || {
        fb.bindings
            .iter()
            .map(|b| b.source.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let location = quote(fb.location.as_deref().unwrap_or_default());
    match fb.kind {
        FeedbackKind::Tag => {
            let targets = fb
                .bindings
                .iter()
                .map(|b| b.target.as_str())
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "tag as {targets} if {cond} with {} at {location}",
                sources()
            )
        }
        FeedbackKind::Filter if fb.bindings.is_empty() => {
            format!("filter if {cond} at {location}")
        }
        FeedbackKind::Filter => format!("filter {} if {cond} at {location}", sources()),
        kind => match &fb.message {
            Some(msg) => format!("{kind} {cond} with {}", quote(msg)),
            None => format!("{kind} {cond}"),
        },
    }
}

pub fn pretty_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Literal::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Double(v) => {
            let _ = write!(out, "{v:?}");
        }
        Literal::Str(s) => out.push_str(&quote(s)),
    }
}

fn binary_prec(expr: &Expr) -> Option<u8> {
    match &expr.kind {
        ExprKind::Binary { op, .. } => Some(op.precedence()),
        _ => None,
    }
}

fn write_operand(out: &mut String, expr: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, expr);
        out.push(')');
    } else {
        write_expr(out, expr);
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Lit(lit) => write_literal(out, lit),
        ExprKind::Keyword(kw) => out.push_str(kw.name()),
        ExprKind::Access {
            stream,
            offset,
            default,
        } => {
            out.push_str(stream);
            if let Some(d) = default {
                let _ = write!(out, "[{offset}, ");
                write_expr(out, d);
                out.push(']');
            }
        }
        ExprKind::Absolute {
            stream,
            index,
            default,
        } => {
            let _ = write!(out, "{stream}#[{index}, ");
            write_expr(out, default);
            out.push(']');
        }
        ExprKind::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
        ExprKind::Unary { op, operand } => {
            out.push(match op {
                UnaryOp::Not => '!',
                UnaryOp::Neg => '-',
            });
            // a negative literal operand would lex as `--1`, which is fine,
            // but a binary operand needs grouping
            write_operand(out, operand, binary_prec(operand).is_some());
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let right_assoc = *op == BinaryOp::Pow;
            let lhs_parens =
                binary_prec(lhs).is_some_and(|p| p < prec || (p == prec && right_assoc));
            let rhs_parens =
                binary_prec(rhs).is_some_and(|p| p < prec || (p == prec && !right_assoc));
            write_operand(out, lhs, lhs_parens);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, rhs_parens);
        }
        ExprKind::If {
            cond,
            then,
            elifs,
            otherwise,
        } => {
            out.push_str("if ");
            write_expr(out, cond);
            out.push_str(" { ");
            write_expr(out, then);
            out.push_str(" }");
            for (c, e) in elifs {
                out.push_str(" elif ");
                write_expr(out, c);
                out.push_str(" { ");
                write_expr(out, e);
                out.push_str(" }");
            }
            out.push_str(" else { ");
            write_expr(out, otherwise);
            out.push_str(" }");
        }
        ExprKind::Switch {
            scrutinee,
            cases,
            default,
        } => {
            out.push_str("switch ");
            write_expr(out, scrutinee);
            out.push_str(" {");
            for (lit, body) in cases {
                out.push_str(" case ");
                write_literal(out, lit);
                out.push_str(" { ");
                write_expr(out, body);
                out.push_str(" }");
            }
            out.push_str(" default { ");
            write_expr(out, default);
            out.push_str(" } }");
        }
    }
}
