//! Combining several specification files into one.

use std::collections::HashMap;

use super::ast::*;
use super::error::MergeError;
use super::pretty::pretty_expr;

/// Concatenates specifications in order.
///
/// Streams declared in several files are unified when the declarations
/// agree (same kind and type, and for outputs the same definition);
/// anything else is a conflict. Feedback declarations are appended in file
/// order.
pub fn merge_specifications(
    specs: impl IntoIterator<Item = Specification>,
) -> Result<Specification, MergeError> {
    let mut specs = specs.into_iter();
    let mut merged = specs.next().ok_or(MergeError::Empty)?;
    let mut known: HashMap<String, (StreamKind, StreamType, Option<String>)> = merged
        .streams()
        .map(|d| (d.name.clone(), signature(d)))
        .collect();
    for spec in specs {
        for decl in spec.inputs.into_iter().chain(spec.outputs) {
            let sig = signature(&decl);
            match known.get(&decl.name) {
                Some(existing) if *existing == sig => continue,
                Some(existing) => {
                    return Err(MergeError::Conflict {
                        name: decl.name.clone(),
                        reason: describe_conflict(existing, &sig),
                    })
                }
                None => {
                    known.insert(decl.name.clone(), sig);
                    match decl.kind {
                        StreamKind::Input => merged.inputs.push(decl),
                        StreamKind::Output => merged.outputs.push(decl),
                    }
                }
            }
        }
        merged.feedback.extend(spec.feedback);
    }
    Ok(merged)
}

fn signature(decl: &StreamDecl) -> (StreamKind, StreamType, Option<String>) {
    (
        decl.kind,
        decl.ty,
        decl.definition.as_ref().map(pretty_expr),
    )
}

fn describe_conflict(
    a: &(StreamKind, StreamType, Option<String>),
    b: &(StreamKind, StreamType, Option<String>),
) -> String {
    if a.0 != b.0 {
        "declared as both input and output".to_string()
    } else if a.1 != b.1 {
        format!("types {} and {} differ", a.1, b.1)
    } else {
        format!(
            "definitions differ: `{}` vs `{}`",
            a.2.as_deref().unwrap_or_default(),
            b.2.as_deref().unwrap_or_default()
        )
    }
}
