//! Static analysis: type checking, the dependency graph, well-formedness,
//! the efficiently monitorable fragment and buffer planning.

mod bounds;
mod graph;
pub mod ir;
mod typecheck;

use serde::Serialize;

pub use bounds::{compute_evaluation_order, compute_memory_bounds, BufferBounds, MemoryPlan};
pub use graph::{
    build_dependency_graph, check_well_formed, classify_efficiently_monitorable, positive_cycle,
    Cycle, DependencyGraph, Edge, ObserverEdge, WellFormedness,
};
pub use ir::StreamId;
pub use typecheck::{lower, type_check, CheckedSpec, Observer, StreamInfo, TypeError};

use crate::syntax::{desugar, Specification, StreamType};

/// Everything the engine needs besides the lowered definitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisResult {
    pub well_formed: bool,
    /// No positive cycle and every latency finite.
    pub efficiently_monitorable: bool,
    pub buffer_bounds: MemoryPlan,
    pub evaluation_order: Vec<String>,
    pub type_table: Vec<(String, StreamType)>,
    /// Explanation when either verdict is negative.
    pub witness: Option<String>,
}

impl AnalysisResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis results serialize")
    }
}

/// A specification that passed type checking, with its analysis.
#[derive(Debug, Clone)]
pub struct Analyzed {
    pub checked: CheckedSpec,
    pub graph: DependencyGraph,
    pub result: AnalysisResult,
    pub order: Vec<StreamId>,
}

/// Desugars, type checks and analyses a parsed specification. Ill-formed
/// specifications are reported in the result rather than as an error.
pub fn analyze(spec: &Specification) -> Result<Analyzed, TypeError> {
    let core = desugar(spec.clone());
    let checked = lower(&core)?;
    let graph = build_dependency_graph(&checked);
    let verdict = check_well_formed(&graph);
    let plan = compute_memory_bounds(&graph);
    let positive = positive_cycle(&graph);
    let order = if verdict.is_well_formed() {
        compute_evaluation_order(&graph).expect("well-formed graphs have acyclic zero-weight edges")
    } else {
        Vec::new()
    };
    let witness = if !verdict.is_well_formed() {
        Some(verdict.describe(&graph))
    } else if let Some(c) = &positive {
        Some(format!(
            "positive cycle {} (weight {}) means unbounded lookahead",
            c.display(&graph),
            c.weight(&graph)
        ))
    } else if !plan.is_bounded() {
        Some("an absolute offset on a cycle makes lookahead unbounded".to_string())
    } else {
        None
    };
    let result = AnalysisResult {
        well_formed: verdict.is_well_formed(),
        efficiently_monitorable: verdict.is_well_formed()
            && positive.is_none()
            && plan.is_bounded(),
        buffer_bounds: plan,
        evaluation_order: order.iter().map(|s| checked.name(*s).to_string()).collect(),
        type_table: checked.type_table(),
        witness,
    };
    Ok(Analyzed {
        checked,
        graph,
        result,
        order,
    })
}
