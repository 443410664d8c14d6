//! Buffer planning and the static evaluation order.
//!
//! The latency of a node is how many positions its value may trail the
//! newest input: `latency(c) = max(0, max over accesses c -> t of
//! w + latency(t))`, where an absolute access `t#[p, _]` counts as `w = p`
//! (position 0 has to wait for `t@p`). Values are kept until their
//! position is emitted, which happens `L = max latency` positions after
//! arrival at the latest, and until every consumer has read them.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::graph::DependencyGraph;
use super::ir::StreamId;
use crate::syntax::Access;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BufferBounds {
    /// Deepest past access, `|w|` of the most negative offset.
    pub past_depth: u64,
    /// Largest future offset of any access.
    pub future_depth: u64,
    /// Positions retained for the whole run because of `#[p, _]` accesses.
    pub pinned: Vec<u64>,
    /// `None` when lookahead is unbounded.
    pub latency: Option<u64>,
    /// Ring slots; `None` when the whole trace has to be kept.
    pub capacity: Option<usize>,
}

/// Buffer bounds per stream plus the latency of each feedback condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemoryPlan {
    pub streams: Vec<BufferBounds>,
    pub observer_latency: Vec<Option<u64>>,
    /// Largest latency over all nodes, `None` if any is unbounded.
    pub max_latency: Option<u64>,
}

impl MemoryPlan {
    pub fn is_bounded(&self) -> bool {
        self.max_latency.is_some()
    }
}

/// Accesses as `(consumer node, producer stream, weight)`, observers
/// numbered after the streams.
fn latency_edges(g: &DependencyGraph) -> Vec<(usize, usize, i128)> {
    let weight = |a: Access| match a {
        Access::Relative(w) => w as i128,
        Access::Absolute(p) => p as i128,
    };
    g.edges
        .iter()
        .map(|e| (e.from.0, e.to.0, weight(e.access)))
        .chain(
            g.observer_edges
                .iter()
                .map(|e| (g.len() + e.observer, e.to.0, weight(e.access))),
        )
        .collect()
}

/// Longest clamped paths; nodes on or behind a positive cycle get `None`.
fn latencies(g: &DependencyGraph) -> Vec<Option<u64>> {
    let nodes = g.len() + g.num_observers;
    let edges = latency_edges(g);
    let mut lat = vec![0i128; nodes];
    let mut unbounded = vec![false; nodes];
    for round in 0..=nodes {
        let mut changed = false;
        for &(c, t, w) in &edges {
            if w + lat[t] > lat[c] {
                lat[c] = w + lat[t];
                changed = true;
                if round == nodes {
                    unbounded[c] = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    loop {
        let mut changed = false;
        for &(c, t, _) in &edges {
            if unbounded[t] && !unbounded[c] {
                unbounded[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..nodes)
        .map(|v| (!unbounded[v]).then(|| u64::try_from(lat[v]).unwrap_or(u64::MAX)))
        .collect()
}

/// Computes per-stream buffer bounds and ring capacities.
pub fn compute_memory_bounds(g: &DependencyGraph) -> MemoryPlan {
    let lat = latencies(g);
    let max_latency = lat.iter().try_fold(0u64, |acc, l| l.map(|l| acc.max(l)));
    let mut streams: Vec<BufferBounds> = (0..g.len())
        .map(|s| BufferBounds {
            past_depth: 0,
            future_depth: 0,
            pinned: Vec::new(),
            latency: lat[s],
            capacity: max_latency.map(|l| l as usize),
        })
        .collect();
    let accesses = g.edges.iter().map(|e| (e.from.0, e.to, e.access)).chain(
        g.observer_edges
            .iter()
            .map(|e| (g.len() + e.observer, e.to, e.access)),
    );
    for (consumer, StreamId(s), access) in accesses {
        let b = &mut streams[s];
        match access {
            Access::Relative(w) => {
                if w < 0 {
                    b.past_depth = b.past_depth.max(w.unsigned_abs());
                } else {
                    b.future_depth = b.future_depth.max(w as u64);
                }
                if let (Some(cap), Some(l)) = (b.capacity.as_mut(), lat[consumer]) {
                    let need = (l as i128 - w as i128).max(0);
                    *cap = (*cap).max(usize::try_from(need).unwrap_or(usize::MAX));
                }
            }
            Access::Absolute(p) => {
                if !b.pinned.contains(&p) {
                    b.pinned.push(p);
                }
            }
        }
    }
    for b in &mut streams {
        b.pinned.sort_unstable();
        if let Some(cap) = b.capacity.as_mut() {
            *cap = cap.saturating_add(1);
        }
    }
    MemoryPlan {
        observer_latency: lat[g.len()..].to_vec(),
        streams,
        max_latency,
    }
}

/// Outputs in a topological order of the zero-weight edges (a producer read
/// at offset 0 comes before its consumer), ties broken by declaration
/// order. `None` if the zero-weight edges contain a cycle.
pub fn compute_evaluation_order(g: &DependencyGraph) -> Option<Vec<StreamId>> {
    let outputs = g.num_inputs..g.len();
    let mut indegree = vec![0usize; g.len()];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for e in &g.edges {
        if e.access == Access::Relative(0) && outputs.contains(&e.to.0) {
            indegree[e.from.0] += 1;
            consumers[e.to.0].push(e.from.0);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = outputs
        .clone()
        .filter(|&v| indegree[v] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(outputs.len());
    while let Some(Reverse(v)) = ready.pop() {
        order.push(StreamId(v));
        for &c in &consumers[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == outputs.len()).then_some(order)
}
