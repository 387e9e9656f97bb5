//! Undirected labeled graphs and the subgraph-isomorphism test.

use crate::error::{EinError, Result};

pub type NodeLabel = u32;
pub type EdgeLabel = u32;

/// Undirected graph with categorical node labels and optional edge labels
/// (datasets without edge labels use label 0 everywhere).
///
/// No self-loops, no parallel edges. Immutable after construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabeledGraph {
    node_labels: Vec<NodeLabel>,
    edges: Vec<(usize, usize, EdgeLabel)>,
    /// Per node: (neighbor, edge index).
    adj: Vec<Vec<(usize, usize)>>,
}

impl LabeledGraph {
    pub fn new(
        node_labels: Vec<NodeLabel>,
        edges: Vec<(usize, usize, EdgeLabel)>,
    ) -> Result<Self> {
        let n = node_labels.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for (idx, &(u, v, _)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(EinError::Graph(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(EinError::Graph(format!("self loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(EinError::Graph(format!("parallel edge ({u}, {v})")));
            }
            adj[u].push((v, idx));
            adj[v].push((u, idx));
        }
        Ok(LabeledGraph {
            node_labels,
            edges,
            adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_label(&self, v: usize) -> NodeLabel {
        self.node_labels[v]
    }

    pub fn node_labels(&self) -> &[NodeLabel] {
        &self.node_labels
    }

    pub fn edge(&self, e: usize) -> (usize, usize, EdgeLabel) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize, EdgeLabel)] {
        &self.edges
    }

    pub fn edge_label(&self, e: usize) -> EdgeLabel {
        self.edges[e].2
    }

    /// Neighbors of `v` as (neighbor, edge index) pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edge index between `u` and `v`, if any.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

/// Subgraph-isomorphism test: true iff there is a label-preserving injective
/// node map from `pattern` into `host` that preserves edges and edge labels
/// (ordinary subgraph semantics, not induced).
///
/// `pattern` must be connected. Plain backtracking with degree and label
/// pruning; this is the test oracle and the inference-time feature check,
/// not the mining hot path.
pub fn contains_subgraph(pattern: &LabeledGraph, host: &LabeledGraph) -> bool {
    let np = pattern.node_count();
    if np == 0 {
        return true;
    }
    if np > host.node_count() || pattern.edge_count() > host.edge_count() {
        return false;
    }

    // Visit pattern nodes in a DFS order so every node after the first has
    // at least one already-mapped neighbor to anchor on.
    let order = dfs_preorder(pattern);
    let mut mapping = vec![usize::MAX; np];
    let mut used = vec![false; host.node_count()];
    match_next(pattern, host, &order, 0, &mut mapping, &mut used)
}

fn dfs_preorder(g: &LabeledGraph) -> Vec<usize> {
    let mut order = Vec::with_capacity(g.node_count());
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, _) in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    order
}

fn match_next(
    pattern: &LabeledGraph,
    host: &LabeledGraph,
    order: &[usize],
    pos: usize,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if pos == order.len() {
        return true;
    }
    let u = order[pos];
    let anchor = pattern
        .neighbors(u)
        .iter()
        .find(|&&(w, _)| mapping[w] != usize::MAX)
        .map(|&(w, _)| mapping[w]);

    let try_candidate = |cand: usize, mapping: &mut [usize], used: &mut [bool]| -> bool {
        if used[cand]
            || host.node_label(cand) != pattern.node_label(u)
            || host.degree(cand) < pattern.degree(u)
        {
            return false;
        }
        // Every already-mapped pattern neighbor must be a host neighbor with
        // the same edge label.
        for &(w, pe) in pattern.neighbors(u) {
            if mapping[w] == usize::MAX {
                continue;
            }
            match host.edge_between(cand, mapping[w]) {
                Some(he) if host.edge_label(he) == pattern.edge_label(pe) => {}
                _ => return false,
            }
        }
        mapping[u] = cand;
        used[cand] = true;
        if match_next(pattern, host, order, pos + 1, mapping, used) {
            return true;
        }
        mapping[u] = usize::MAX;
        used[cand] = false;
        false
    };

    match anchor {
        Some(anchor) => {
            let candidates: Vec<usize> =
                host.neighbors(anchor).iter().map(|&(w, _)| w).collect();
            candidates.into_iter().any(|c| try_candidate(c, mapping, used))
        }
        None => (0..host.node_count()).any(|c| try_candidate(c, mapping, used)),
    }
}
