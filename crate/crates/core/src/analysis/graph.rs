//! The weighted dependency multigraph and the cycle checks on it.
//!
//! A specification has a unique evaluation model when no stream value can
//! depend on itself. On the graph that means no closed walk of total weight
//! zero. Every closed walk decomposes into simple cycles, so such a walk
//! exists exactly when some strongly connected component contains either a
//! zero-weight cycle or both a positive and a negative cycle (going around
//! each the right number of times sums to zero).

use std::fmt;

use super::ir::StreamId;
use super::typecheck::CheckedSpec;
use crate::syntax::Access;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// The consumer, whose definition contains the access.
    pub from: StreamId,
    pub to: StreamId,
    pub access: Access,
}

impl Edge {
    /// Weight for cycle analysis; `None` for absolute accesses.
    pub fn weight(&self) -> Option<i64> {
        match self.access {
            Access::Relative(w) => Some(w),
            Access::Absolute(_) => None,
        }
    }
}

/// An access made by a feedback condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObserverEdge {
    pub observer: usize,
    pub to: StreamId,
    pub access: Access,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    pub names: Vec<String>,
    /// Streams `0..num_inputs` are inputs.
    pub num_inputs: usize,
    pub edges: Vec<Edge>,
    pub observer_edges: Vec<ObserverEdge>,
    pub num_observers: usize,
}

/// A cycle given as edge indices into [`DependencyGraph::edges`], in walk
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle(pub Vec<usize>);

impl Cycle {
    pub fn weight(&self, g: &DependencyGraph) -> i128 {
        self.0
            .iter()
            .map(|&e| g.edges[e].weight().unwrap_or(0) as i128)
            .sum()
    }

    pub fn display<'a>(&'a self, g: &'a DependencyGraph) -> impl fmt::Display + 'a {
        CycleDisplay(self, g)
    }
}

struct CycleDisplay<'a>(&'a Cycle, &'a DependencyGraph);

impl fmt::Display for CycleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (cycle, g) = (self.0, self.1);
        let Some(&first) = cycle.0.first() else {
            return Ok(());
        };
        write!(f, "{}", g.names[g.edges[first].from.0])?;
        for &e in &cycle.0 {
            let edge = &g.edges[e];
            write!(
                f,
                " -[{:+}]-> {}",
                edge.weight().unwrap_or(0),
                g.names[edge.to.0]
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WellFormedness {
    WellFormed,
    ZeroCycle(Cycle),
    /// A positive and a negative cycle sharing a component.
    Opposing {
        positive: Cycle,
        negative: Cycle,
    },
}

impl WellFormedness {
    pub fn is_well_formed(&self) -> bool {
        matches!(self, WellFormedness::WellFormed)
    }

    pub fn describe(&self, g: &DependencyGraph) -> String {
        match self {
            WellFormedness::WellFormed => "well-formed".to_string(),
            WellFormedness::ZeroCycle(c) => format!("zero-weight cycle {}", c.display(g)),
            WellFormedness::Opposing { positive, negative } => format!(
                "cycles {} (weight {}) and {} (weight {}) combine into a zero-weight dependency",
                positive.display(g),
                positive.weight(g),
                negative.display(g),
                negative.weight(g)
            ),
        }
    }
}

/// One edge per syntactic access in every output definition and feedback
/// condition, including accesses in branches that may not be taken.
pub fn build_dependency_graph(spec: &CheckedSpec) -> DependencyGraph {
    let mut edges = Vec::new();
    for (i, def) in spec.definitions.iter().enumerate() {
        if let Some(def) = def {
            def.for_each_access(&mut |to, access| {
                edges.push(Edge {
                    from: StreamId(i),
                    to,
                    access,
                })
            });
        }
    }
    let mut observer_edges = Vec::new();
    for (k, obs) in spec.observers.iter().enumerate() {
        obs.condition.for_each_access(&mut |to, access| {
            observer_edges.push(ObserverEdge {
                observer: k,
                to,
                access,
            })
        });
    }
    DependencyGraph {
        names: spec.streams.iter().map(|s| s.name.clone()).collect(),
        num_inputs: spec.num_inputs,
        edges,
        observer_edges,
        num_observers: spec.observers.len(),
    }
}

impl DependencyGraph {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn relative_edges(&self) -> impl Iterator<Item = (usize, &Edge, i64)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.weight().map(|w| (i, e, w)))
    }

    /// Strongly connected components over relative edges, each as a sorted
    /// vertex list. Only components that contain at least one edge are kept.
    pub fn cyclic_components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for (_, e, _) in self.relative_edges() {
            adj[e.from.0].push(e.to.0);
        }
        let comp = tarjan(&adj);
        let count = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); count];
        for (v, &c) in comp.iter().enumerate() {
            members[c].push(v);
        }
        let mut has_edge = vec![false; count];
        for (_, e, _) in self.relative_edges() {
            if comp[e.from.0] == comp[e.to.0] {
                has_edge[comp[e.from.0]] = true;
            }
        }
        members
            .into_iter()
            .zip(has_edge)
            .filter_map(|(m, keep)| keep.then_some(m))
            .collect()
    }

    fn component_edges(&self, members: &[usize]) -> Vec<(usize, usize, usize, i128)> {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        self.relative_edges()
            .filter(|(_, e, _)| local[e.from.0] != usize::MAX && local[e.to.0] != usize::MAX)
            .map(|(i, e, w)| (i, local[e.from.0], local[e.to.0], w as i128))
            .collect()
    }
}

/// Iterative Tarjan; returns a component index per vertex.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*child) {
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Bellman-Ford on `sign * weight` from a virtual source reaching every
/// vertex. Returns converged longest-path potentials, or a cycle of strictly
/// positive signed weight.
fn longest_paths(
    n: usize,
    edges: &[(usize, usize, usize, i128)],
    sign: i128,
) -> Result<Vec<i128>, Cycle> {
    let mut dist = vec![0i128; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    for round in 0..=n {
        let mut relaxed = None;
        for (k, &(_, u, v, w)) in edges.iter().enumerate() {
            if dist[u] + sign * w > dist[v] {
                dist[v] = dist[u] + sign * w;
                pred[v] = Some(k);
                relaxed = Some(v);
            }
        }
        let Some(mut v) = relaxed else {
            return Ok(dist);
        };
        if round == n {
            // still relaxing after n rounds: walk back into the cycle
            for _ in 0..n {
                v = edges[pred[v].unwrap()].1;
            }
            let start = v;
            let mut cycle = Vec::new();
            loop {
                let k = pred[v].unwrap();
                cycle.push(edges[k].0);
                v = edges[k].1;
                if v == start {
                    break;
                }
            }
            cycle.reverse();
            return Err(Cycle(cycle));
        }
    }
    unreachable!("Bellman-Ford terminates within n + 1 rounds")
}

/// Finds a cycle among edges that are tight with respect to `dist`. Every
/// such cycle has signed weight zero.
fn tight_cycle(
    n: usize,
    edges: &[(usize, usize, usize, i128)],
    dist: &[i128],
    sign: i128,
) -> Option<Cycle> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &(_, u, v, w)) in edges.iter().enumerate() {
        if dist[u] + sign * w == dist[v] {
            adj[u].push(k);
        }
    }
    // 0 unvisited, 1 on the DFS path, 2 done
    let mut color = vec![0u8; n];
    let mut via: Vec<usize> = vec![usize::MAX; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = call.last_mut() {
            let Some(&k) = adj[u].get(*next) else {
                color[u] = 2;
                call.pop();
                continue;
            };
            *next += 1;
            let v = edges[k].2;
            match color[v] {
                0 => {
                    color[v] = 1;
                    via[v] = k;
                    call.push((v, 0));
                }
                1 => {
                    let mut cycle = vec![edges[k].0];
                    let mut w = u;
                    while w != v {
                        let e = via[w];
                        cycle.push(edges[e].0);
                        w = edges[e].1;
                    }
                    cycle.reverse();
                    return Some(Cycle(cycle));
                }
                _ => {}
            }
        }
    }
    None
}

/// Decides well-formedness, producing a witness when it fails.
pub fn check_well_formed(g: &DependencyGraph) -> WellFormedness {
    for members in g.cyclic_components() {
        let edges = g.component_edges(&members);
        let n = members.len();
        match (longest_paths(n, &edges, 1), longest_paths(n, &edges, -1)) {
            (Err(positive), Err(negative)) => {
                return WellFormedness::Opposing { positive, negative }
            }
            (Ok(dist), _) => {
                if let Some(c) = tight_cycle(n, &edges, &dist, 1) {
                    return WellFormedness::ZeroCycle(c);
                }
            }
            (Err(_), Ok(dist)) => {
                if let Some(c) = tight_cycle(n, &edges, &dist, -1) {
                    return WellFormedness::ZeroCycle(c);
                }
            }
        }
    }
    WellFormedness::WellFormed
}

/// A cycle of positive weight over relative edges, if one exists.
pub fn positive_cycle(g: &DependencyGraph) -> Option<Cycle> {
    g.cyclic_components()
        .into_iter()
        .find_map(|members| longest_paths(members.len(), &g.component_edges(&members), 1).err())
}

/// True when no cycle has positive weight, i.e. lookahead is bounded.
pub fn classify_efficiently_monitorable(g: &DependencyGraph) -> bool {
    positive_cycle(g).is_none()
}
