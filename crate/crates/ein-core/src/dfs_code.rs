//! DFS codes: the canonical sequence-of-extension-tuples form that gives
//! every connected pattern a unique identity up to isomorphism.
//!
//! A DFS code lists a graph's edges in the order a depth-first traversal
//! discovers them. Each tuple `(i, j, li, le, lj)` records the traversal
//! indices of the endpoints and their labels; `i < j` is a forward (tree)
//! edge discovering vertex `j`, `i > j` closes a cycle back to an ancestor.
//! The canonical code of a graph is the minimum over all traversals under
//! the edge order implemented by [`gspan_tuple_cmp`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::bitset::Bitset;
use crate::error::{EinError, Result};
use crate::graph::{EdgeLabel, LabeledGraph, NodeLabel};

/// One extension tuple of a DFS code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CodeTuple {
    pub from: usize,
    pub to: usize,
    pub from_label: NodeLabel,
    pub edge_label: EdgeLabel,
    pub to_label: NodeLabel,
}

impl CodeTuple {
    pub fn new(
        from: usize,
        to: usize,
        from_label: NodeLabel,
        edge_label: EdgeLabel,
        to_label: NodeLabel,
    ) -> Self {
        CodeTuple {
            from,
            to,
            from_label,
            edge_label,
            to_label,
        }
    }

    pub fn is_forward(&self) -> bool {
        self.from < self.to
    }
}

/// Edge order on DFS-code tuples. Backward edges sort before forward ones
/// emitted from the same position; among forward edges deeper sources come
/// first; ties on the structural part fall back to the label triple.
///
/// Note the derived `Ord` on [`CodeTuple`] is plain field-lexicographic and
/// is only used as an arbitrary deterministic order (map keys, output
/// sorting). Minimality is always decided by this function.
pub fn gspan_tuple_cmp(a: &CodeTuple, b: &CodeTuple) -> Ordering {
    let labels = |t: &CodeTuple| (t.from_label, t.edge_label, t.to_label);
    match (a.is_forward(), b.is_forward()) {
        (false, false) => a
            .from
            .cmp(&b.from)
            .then(a.to.cmp(&b.to))
            .then(labels(a).cmp(&labels(b))),
        (true, true) => a
            .to
            .cmp(&b.to)
            .then(b.from.cmp(&a.from))
            .then(labels(a).cmp(&labels(b))),
        // backward vs forward: a < b iff a.from < b.to
        (false, true) => {
            if a.from < b.to {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        // forward vs backward: a < b iff a.to <= b.from
        (true, false) => {
            if a.to <= b.from {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
    }
}

/// A sequence of extension tuples. `Ord`/`PartialOrd` are derived
/// (structural) and serve only as a deterministic sort key; see
/// [`gspan_tuple_cmp`] for the order that defines minimality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct DfsCode {
    pub tuples: Vec<CodeTuple>,
}

impl DfsCode {
    pub fn new(tuples: Vec<CodeTuple>) -> Self {
        DfsCode { tuples }
    }

    /// Pattern size |H|: the number of edges.
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Number of vertices of the encoded graph.
    pub fn node_count(&self) -> usize {
        self.tuples
            .iter()
            .map(|t| t.from.max(t.to) + 1)
            .max()
            .unwrap_or(0)
    }

    /// Label of each DFS vertex, in index order.
    pub fn vertex_labels(&self) -> Vec<NodeLabel> {
        let mut labels = vec![0; self.node_count()];
        for (k, t) in self.tuples.iter().enumerate() {
            if k == 0 {
                labels[t.from] = t.from_label;
            }
            if t.is_forward() {
                labels[t.to] = t.to_label;
            }
        }
        labels
    }

    /// Tuple indices of the rightmost path, last forward edge first, the
    /// edge leaving the root last.
    pub fn rightmost_path(&self) -> Vec<usize> {
        let mut path = Vec::new();
        let mut next_to = usize::MAX;
        for idx in (0..self.tuples.len()).rev() {
            let t = &self.tuples[idx];
            if t.is_forward() && (path.is_empty() || t.to == next_to) {
                path.push(idx);
                next_to = t.from;
            }
        }
        path
    }

    /// DFS vertex indices on the rightmost path, root first.
    pub fn rightmost_path_vertices(&self) -> Vec<usize> {
        let path = self.rightmost_path();
        let mut vertices = Vec::with_capacity(path.len() + 1);
        if let Some(&root_edge) = path.last() {
            vertices.push(self.tuples[root_edge].from);
        }
        for &idx in path.iter().rev() {
            vertices.push(self.tuples[idx].to);
        }
        vertices
    }

    pub fn child(&self, tuple: CodeTuple) -> DfsCode {
        let mut tuples = self.tuples.clone();
        tuples.push(tuple);
        DfsCode { tuples }
    }
}

impl fmt::Display for DfsCode {
    /// Lossless textual form used in CSV headers and model files:
    /// tuples as `i-j-li-le-lj` joined by `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.tuples.iter().enumerate() {
            if k > 0 {
                write!(f, ";")?;
            }
            write!(
                f,
                "{}-{}-{}-{}-{}",
                t.from, t.to, t.from_label, t.edge_label, t.to_label
            )?;
        }
        Ok(())
    }
}

impl FromStr for DfsCode {
    type Err = EinError;

    fn from_str(s: &str) -> Result<Self> {
        let mut tuples = Vec::new();
        for part in s.split(';') {
            let fields: Vec<&str> = part.split('-').collect();
            if fields.len() != 5 {
                return Err(EinError::Code(format!(
                    "tuple '{part}' does not have five '-'-separated fields"
                )));
            }
            let num = |i: usize| -> Result<usize> {
                fields[i]
                    .parse()
                    .map_err(|_| EinError::Code(format!("bad integer '{}' in '{part}'", fields[i])))
            };
            tuples.push(CodeTuple::new(
                num(0)?,
                num(1)?,
                num(2)? as NodeLabel,
                num(3)? as EdgeLabel,
                num(4)? as NodeLabel,
            ));
        }
        Ok(DfsCode::new(tuples))
    }
}

/// Materializes the graph a DFS code denotes.
///
/// Accepts any structurally well-formed tuple sequence: the first tuple must
/// be `(0, 1)`, forward edges must discover vertices densely, labels must be
/// consistent, and edges must not repeat. The result has exactly `len()`
/// edges and is connected.
pub fn graph_from_code(code: &DfsCode) -> Result<LabeledGraph> {
    if code.is_empty() {
        return Err(EinError::Code("empty code".into()));
    }
    let first = &code.tuples[0];
    if (first.from, first.to) != (0, 1) {
        return Err(EinError::Code(format!(
            "first tuple must have indices (0, 1), got ({}, {})",
            first.from, first.to
        )));
    }
    let mut labels: Vec<NodeLabel> = vec![first.from_label, first.to_label];
    let mut edges: Vec<(usize, usize, EdgeLabel)> = Vec::with_capacity(code.len());
    for (k, t) in code.tuples.iter().enumerate() {
        if t.from == t.to {
            return Err(EinError::Code(format!("tuple {k} is a self loop")));
        }
        if t.is_forward() {
            if k > 0 {
                if t.to != labels.len() {
                    return Err(EinError::Code(format!(
                        "tuple {k} discovers vertex {} but {} vertices exist",
                        t.to,
                        labels.len()
                    )));
                }
                if t.from >= labels.len() {
                    return Err(EinError::Code(format!(
                        "tuple {k} extends from unknown vertex {}",
                        t.from
                    )));
                }
                labels.push(t.to_label);
            }
        } else if t.from >= labels.len() || t.to >= labels.len() {
            return Err(EinError::Code(format!(
                "tuple {k} references an undiscovered vertex"
            )));
        }
        if labels[t.from] != t.from_label
            || (!t.is_forward() || k == 0) && labels[t.to] != t.to_label
        {
            return Err(EinError::Code(format!("tuple {k} has inconsistent labels")));
        }
        edges.push((t.from, t.to, t.edge_label));
    }
    LabeledGraph::new(labels, edges).map_err(|e| EinError::Code(format!("{e}")))
}

/// One partial DFS traversal of a graph, used while building the minimum
/// code: maps DFS indices to graph nodes and tracks consumed edges.
#[derive(Clone)]
struct Traversal {
    map: Vec<usize>,
    node_used: Bitset,
    edge_used: Bitset,
}

/// Greedy construction of the minimum DFS code of `g`: repeatedly take the
/// smallest extension tuple realizable by any traversal consistent with the
/// prefix so far, keeping exactly the traversals that realize it. Because
/// the chosen extension always emits every remaining edge of its source
/// vertex before that vertex leaves the rightmost path, the surviving
/// traversals always complete, and per-step minimality gives the
/// lexicographic minimum over all traversals.
///
/// With `reference` set, aborts with `None` as soon as the built code
/// departs from it, which decides non-minimality early.
fn build_min_code(g: &LabeledGraph, reference: Option<&DfsCode>) -> Option<DfsCode> {
    let ne = g.edge_count();
    // Seed: the smallest single-edge tuple over both orientations of every edge.
    let mut best_seed: Option<(NodeLabel, EdgeLabel, NodeLabel)> = None;
    for &(u, v, le) in g.edges() {
        for (a, b) in [(u, v), (v, u)] {
            let key = (g.node_label(a), le, g.node_label(b));
            if best_seed.is_none_or(|s| key < s) {
                best_seed = Some(key);
            }
        }
    }
    let (l0, le0, l1) = best_seed?;
    let mut code = DfsCode::new(vec![CodeTuple::new(0, 1, l0, le0, l1)]);
    if let Some(r) = reference {
        if r.tuples[0] != code.tuples[0] {
            return None;
        }
    }
    let mut traversals = Vec::new();
    for (eidx, &(u, v, le)) in g.edges().iter().enumerate() {
        if le != le0 {
            continue;
        }
        for (a, b) in [(u, v), (v, u)] {
            if (g.node_label(a), g.node_label(b)) == (l0, l1) {
                let mut node_used = Bitset::new(g.node_count());
                node_used.set(a);
                node_used.set(b);
                let mut edge_used = Bitset::new(ne);
                edge_used.set(eidx);
                traversals.push(Traversal {
                    map: vec![a, b],
                    node_used,
                    edge_used,
                });
            }
        }
    }

    while code.len() < ne {
        let rm_vertices = code.rightmost_path_vertices();
        let labels = code.vertex_labels();
        let rightmost = *rm_vertices.last().expect("code is nonempty");

        // (tuple, extending edge, new node if forward) per traversal.
        let mut best_tuple: Option<CodeTuple> = None;
        let mut extensions: Vec<(CodeTuple, usize, usize, usize)> = Vec::new();
        for (ti, tr) in traversals.iter().enumerate() {
            let r_node = tr.map[rightmost];
            // Backward: unused edges from the rightmost vertex to a vertex
            // on the rightmost path.
            for &(nbr, eidx) in g.neighbors(r_node) {
                if tr.edge_used.get(eidx) || !tr.node_used.get(nbr) {
                    continue;
                }
                if let Some(&j) = rm_vertices.iter().find(|&&v| tr.map[v] == nbr) {
                    let t = CodeTuple::new(
                        rightmost,
                        j,
                        labels[rightmost],
                        g.edge_label(eidx),
                        labels[j],
                    );
                    if consider(&mut best_tuple, t) {
                        extensions.push((t, ti, eidx, nbr));
                    }
                }
            }
            // Forward: unused edges from any rightmost-path vertex to an
            // unvisited vertex.
            for &v in &rm_vertices {
                let v_node = tr.map[v];
                for &(nbr, eidx) in g.neighbors(v_node) {
                    if tr.edge_used.get(eidx) || tr.node_used.get(nbr) {
                        continue;
                    }
                    let t = CodeTuple::new(
                        v,
                        code.node_count(),
                        labels[v],
                        g.edge_label(eidx),
                        g.node_label(nbr),
                    );
                    if consider(&mut best_tuple, t) {
                        extensions.push((t, ti, eidx, nbr));
                    }
                }
            }
        }

        let best = best_tuple.expect("connected graph always extends");
        if let Some(r) = reference {
            if r.tuples[code.len()] != best {
                return None;
            }
        }
        let mut next = Vec::new();
        for (t, ti, eidx, nbr) in extensions {
            if t != best {
                continue;
            }
            let mut tr = traversals[ti].clone();
            tr.edge_used.set(eidx);
            if t.is_forward() {
                tr.map.push(nbr);
                tr.node_used.set(nbr);
            }
            next.push(tr);
        }
        traversals = next;
        code.tuples.push(best);
    }
    Some(code)
}

/// Track the running minimum; returns whether `t` could still matter
/// (i.e. `t <=` current best) so callers can skip storing dominated tuples.
fn consider(best: &mut Option<CodeTuple>, t: CodeTuple) -> bool {
    match best {
        None => {
            *best = Some(t);
            true
        }
        Some(b) => match gspan_tuple_cmp(&t, b) {
            Ordering::Less => {
                *best = Some(t);
                true
            }
            Ordering::Equal => true,
            Ordering::Greater => false,
        },
    }
}

/// The canonical (lexicographically minimum) DFS code of a connected graph
/// with at least one edge. Isomorphic graphs map to identical codes.
pub fn min_code(g: &LabeledGraph) -> Result<DfsCode> {
    if g.edge_count() == 0 {
        return Err(EinError::Graph("min_code requires at least one edge".into()));
    }
    if !g.is_connected() {
        return Err(EinError::Graph("min_code requires a connected graph".into()));
    }
    Ok(build_min_code(g, None).expect("connected graph with edges has a code"))
}

/// True iff `code` equals the minimum DFS code of the graph it denotes.
pub fn is_min_code(code: &DfsCode) -> Result<bool> {
    let g = graph_from_code(code)?;
    Ok(build_min_code(&g, Some(code)).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(labels: &[u32], edges: &[(usize, usize, u32)]) -> LabeledGraph {
        LabeledGraph::new(labels.to_vec(), edges.to_vec()).unwrap()
    }

    fn code(s: &str) -> DfsCode {
        s.parse().unwrap()
    }

    #[test]
    fn single_edge_code_materializes() {
        let g = graph_from_code(&code("0-1-5-0-7")).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!((g.node_label(0), g.node_label(1)), (5, 7));
    }

    #[test]
    fn triangle_code_materializes() {
        let g = graph_from_code(&code("0-1-3-0-3;1-2-3-0-3;2-0-3-0-3")).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_connected());
    }

    #[test]
    fn malformed_codes_rejected() {
        assert!(graph_from_code(&code("1-2-0-0-0")).is_err());
        assert!(graph_from_code(&code("0-1-0-0-0;3-4-0-0-0")).is_err());
        assert!(graph_from_code(&code("0-1-0-0-0;1-2-1-0-0")).is_err()); // label mismatch
        assert!(graph_from_code(&code("0-1-0-0-0;0-1-0-0-0")).is_err()); // duplicate edge
    }

    #[test]
    fn min_code_single_edge_orders_labels() {
        let g = graph(&[9, 2], &[(0, 1, 4)]);
        assert_eq!(min_code(&g).unwrap(), code("0-1-2-4-9"));
    }

    #[test]
    fn min_code_rejects_edgeless_and_disconnected() {
        assert!(min_code(&graph(&[0], &[])).is_err());
        assert!(min_code(&graph(&[0, 0, 0], &[(0, 1, 0)])).is_err());
    }

    #[test]
    fn isomorphic_paths_share_a_code() {
        // Two relabelings of the path 0-1-2-3 with node labels (2, 0, 1, 0).
        let a = graph(&[2, 0, 1, 0], &[(0, 1, 0), (1, 2, 0), (2, 3, 0)]);
        let b = graph(&[0, 1, 0, 2], &[(0, 1, 0), (1, 2, 0), (2, 3, 0)]);
        assert_eq!(min_code(&a).unwrap(), min_code(&b).unwrap());
    }

    #[test]
    fn min_code_round_trips_through_graph() {
        let g = graph(
            &[1, 0, 0, 1, 2],
            &[(0, 1, 0), (1, 2, 1), (2, 3, 0), (3, 0, 0), (2, 4, 0)],
        );
        let c = min_code(&g).unwrap();
        let back = graph_from_code(&c).unwrap();
        assert_eq!(min_code(&back).unwrap(), c);
        assert!(is_min_code(&c).unwrap());
    }

    #[test]
    fn canonical_triangle_is_min_and_skewed_traversal_is_not() {
        // Triangle with labels 0, 1, 2: the minimum code starts on the 0-1 edge.
        let minimal = code("0-1-0-0-1;1-2-1-0-2;2-0-2-0-0");
        assert!(is_min_code(&minimal).unwrap());
        // Valid DFS traversal of the same triangle that starts on the 0-2 edge.
        let skewed = code("0-1-0-0-2;1-2-2-0-1;2-0-1-0-0");
        assert!(!is_min_code(&skewed).unwrap());
        assert_eq!(
            min_code(&graph_from_code(&skewed).unwrap()).unwrap(),
            minimal
        );
    }

    /// Enumerate every complete DFS code of `g` by brute force: extend every
    /// traversal with every legal rightmost-path extension. Independent of
    /// the greedy engine; exponential, for tiny test graphs only.
    fn all_dfs_codes(g: &LabeledGraph) -> Vec<DfsCode> {
        fn extend(
            g: &LabeledGraph,
            code: &DfsCode,
            map: &[usize],
            edge_used: &Bitset,
            out: &mut Vec<DfsCode>,
        ) {
            if code.len() == g.edge_count() {
                out.push(code.clone());
                return;
            }
            let rm = code.rightmost_path_vertices();
            let labels = code.vertex_labels();
            let rightmost = *rm.last().unwrap();
            for &(nbr, eidx) in g.neighbors(map[rightmost]) {
                if edge_used.get(eidx) {
                    continue;
                }
                if let Some(&j) = rm.iter().find(|&&v| map[v] == nbr) {
                    let t =
                        CodeTuple::new(rightmost, j, labels[rightmost], g.edge_label(eidx), labels[j]);
                    let mut eu = edge_used.clone();
                    eu.set(eidx);
                    extend(g, &code.child(t), map, &eu, out);
                }
            }
            let mapped: std::collections::HashSet<usize> = map.iter().copied().collect();
            for &v in &rm {
                for &(nbr, eidx) in g.neighbors(map[v]) {
                    if edge_used.get(eidx) || mapped.contains(&nbr) {
                        continue;
                    }
                    let t = CodeTuple::new(
                        v,
                        code.node_count(),
                        labels[v],
                        g.edge_label(eidx),
                        g.node_label(nbr),
                    );
                    let mut m = map.to_vec();
                    m.push(nbr);
                    let mut eu = edge_used.clone();
                    eu.set(eidx);
                    extend(g, &code.child(t), &m, &eu, out);
                }
            }
        }

        let mut out = Vec::new();
        for (eidx, &(u, v, le)) in g.edges().iter().enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                let c = DfsCode::new(vec![CodeTuple::new(
                    0,
                    1,
                    g.node_label(a),
                    le,
                    g.node_label(b),
                )]);
                let mut eu = Bitset::new(g.edge_count());
                eu.set(eidx);
                extend(g, &c, &[a, b], &eu, &mut out);
            }
        }
        out
    }

    #[test]
    fn exactly_the_minimum_of_all_triangle_codes_passes_is_min() {
        let tri = graph(&[0, 1, 2], &[(0, 1, 0), (1, 2, 0), (2, 0, 0)]);
        let all = all_dfs_codes(&tri);
        assert!(!all.is_empty());
        let computed = min_code(&tri).unwrap();
        for c in &all {
            let expect_min = *c == computed;
            assert_eq!(is_min_code(c).unwrap(), expect_min, "code {c}");
        }
        // The greedy minimum really is the least element of the full set.
        assert!(all.contains(&computed));
        for c in &all {
            for (a, b) in computed.tuples.iter().zip(&c.tuples) {
                match gspan_tuple_cmp(a, b) {
                    Ordering::Less => break,
                    Ordering::Equal => continue,
                    Ordering::Greater => panic!("found a code smaller than min_code: {c}"),
                }
            }
        }
    }

    /// Brute-force isomorphism via node permutations; test-only oracle.
    fn naive_isomorphic(a: &LabeledGraph, b: &LabeledGraph) -> bool {
        if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
            return false;
        }
        let n = a.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        // Heap's algorithm, iterative.
        let mut c = vec![0usize; n];
        let check = |perm: &[usize]| {
            (0..n).all(|v| a.node_label(v) == b.node_label(perm[v]))
                && a.edges().iter().all(|&(u, v, l)| {
                    b.edge_between(perm[u], perm[v])
                        .is_some_and(|e| b.edge_label(e) == l)
                })
        };
        if check(&perm) {
            return true;
        }
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                if check(&perm) {
                    return true;
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        false
    }

    #[test]
    fn six_connected_four_node_graphs_get_distinct_codes() {
        // All connected unlabeled 4-node graphs, grouped by brute-force
        // isomorphism: exactly 6 classes (path, star, paw, cycle, diamond,
        // K4), and min_code separates them while collapsing each class to
        // one code.
        let pairs: Vec<(usize, usize)> = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut classes: Vec<(LabeledGraph, DfsCode)> = Vec::new();
        for mask in 1u32..(1 << 6) {
            let edges: Vec<(usize, usize, u32)> = pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &(u, v))| (u, v, 0))
                .collect();
            let g = graph(&[0, 0, 0, 0], &edges);
            if !g.is_connected() {
                continue;
            }
            let c = min_code(&g).unwrap();
            match classes.iter().find(|(rep, _)| naive_isomorphic(rep, &g)) {
                Some((_, rep_code)) => assert_eq!(*rep_code, c),
                None => {
                    assert!(
                        classes.iter().all(|(_, other)| *other != c),
                        "distinct classes must get distinct codes"
                    );
                    classes.push((g, c));
                }
            }
        }
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn min_code_invariant_under_permutation() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(2..=7);
            let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let mut pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            pairs.shuffle(&mut rng);
            let m = rng.gen_range(1..=pairs.len());
            let g = graph(
                &labels,
                &pairs[..m]
                    .iter()
                    .map(|&(u, v)| (u, v, rng.gen_range(0..2)))
                    .collect::<Vec<_>>(),
            );
            if !g.is_connected() {
                continue;
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let permuted = LabeledGraph::new(
                {
                    let mut l = vec![0; n];
                    for v in 0..n {
                        l[perm[v]] = g.node_label(v);
                    }
                    l
                },
                g.edges()
                    .iter()
                    .map(|&(u, v, l)| (perm[u], perm[v], l))
                    .collect(),
            )
            .unwrap();
            assert_eq!(min_code(&g).unwrap(), min_code(&permuted).unwrap());
        }
    }

    #[test]
    fn display_round_trips() {
        let c = code("0-1-0-0-1;1-2-1-0-2;2-0-2-0-0");
        assert_eq!(c.to_string().parse::<DfsCode>().unwrap(), c);
    }
}
