//! Lazy enumeration of all connected patterns occurring in a training set.
//!
//! Patterns live in a forest: one root per distinct labeled single edge,
//! children are minimal-code rightmost-path extensions of their parent, so
//! every pattern with support >= 1 appears exactly once and contains all of
//! its ancestors as subgraphs. Nodes are materialized on demand by
//! [`MiningForest::expand`] and cached; the optimizer's traversal decides
//! how much of the tree ever exists.
//!
//! Occurrence lists exist to make a node's first expansion incremental and
//! are dropped as soon as its children are materialized: symmetric patterns
//! can have combinatorially many embeddings, so retaining every list would
//! dwarf the tree itself. A dropped list can be regenerated from the code.

use std::collections::HashMap;

use crate::bitset::Bitset;
use crate::dfs_code::{gspan_tuple_cmp, is_min_code, CodeTuple, DfsCode};
use crate::error::{EinError, Result};
use crate::graph::LabeledGraph;

pub const DEFAULT_NODE_CAP: usize = 5_000_000;

/// Multiply-xor hasher for the extension-candidate map; the default SipHash
/// shows up in profiles at this call volume and keys are not
/// attacker-controlled.
#[derive(Default)]
struct FxHasher(u64);

impl std::hash::Hasher for FxHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x517c_c1b7_2722_0a95);
    }

    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }

    fn write_u32(&mut self, v: u32) {
        self.write_u64(v as u64);
    }
}

type FxBuildHasher = std::hash::BuildHasherDefault<FxHasher>;

/// Index of a materialized pattern node within its forest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PatternId(pub usize);

/// Flat storage for a pattern's occurrences: for each one, the instance
/// index and the injective node map (DFS index -> graph node). Edges are
/// implied: tuple `(i, j)` of the code occupies the unique graph edge
/// between `map[i]` and `map[j]`.
#[derive(Clone, Debug, Default)]
pub struct ProjectionStore {
    width: usize,
    graphs: Vec<u32>,
    nodes: Vec<u16>,
}

impl ProjectionStore {
    fn new(width: usize) -> Self {
        ProjectionStore {
            width,
            graphs: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graph(&self, i: usize) -> usize {
        self.graphs[i] as usize
    }

    pub fn map(&self, i: usize) -> &[u16] {
        &self.nodes[i * self.width..(i + 1) * self.width]
    }

    fn push(&mut self, graph: usize, map: &[u16]) {
        debug_assert_eq!(map.len(), self.width);
        self.graphs.push(graph as u32);
        self.nodes.extend_from_slice(map);
    }

    fn push_extended(&mut self, graph: usize, map: &[u16], extra: u16) {
        debug_assert_eq!(map.len() + 1, self.width);
        self.graphs.push(graph as u32);
        self.nodes.extend_from_slice(map);
        self.nodes.push(extra);
    }
}

/// Accumulator for one extension tuple during expansion: the support is
/// always tracked; the occurrence store only when the child can ever be
/// expanded itself.
struct Candidate {
    support: Bitset,
    store: Option<ProjectionStore>,
}

impl Candidate {
    fn new(n: usize, keep_store: bool, width: usize) -> Self {
        Candidate {
            support: Bitset::new(n),
            store: keep_store.then(|| ProjectionStore::new(width)),
        }
    }

    fn add(&mut self, graph: usize, map: &[u16], extra: Option<u16>) {
        self.support.set(graph);
        if let Some(store) = &mut self.store {
            match extra {
                Some(x) => store.push_extended(graph, map, x),
                None => store.push(graph, map),
            }
        }
    }
}

/// A node of the mining tree: canonical code, support bitset over training
/// instances, the occurrence list (until first expansion), cached children,
/// and the group weights owned here so the miner and the optimizer share
/// one tree. An empty `beta` means the zero vector (the pattern was never
/// admitted for update).
#[derive(Clone, Debug)]
pub struct PatternNode {
    pub code: DfsCode,
    pub support: Bitset,
    pub projections: Option<ProjectionStore>,
    pub children: Option<Vec<PatternId>>,
    pub parent: Option<PatternId>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MiningForest {
    graphs: Vec<LabeledGraph>,
    maxpat: usize,
    node_cap: usize,
    nodes: Vec<PatternNode>,
    roots: Vec<PatternId>,
    index: HashMap<DfsCode, PatternId>,
}

impl MiningForest {
    /// Builds the forest roots: one per distinct labeled single edge with
    /// nonzero support, with supports and occurrence lists populated and no
    /// children materialized.
    pub fn build_roots(graphs: Vec<LabeledGraph>, maxpat: usize) -> Result<Self> {
        if graphs.is_empty() {
            return Err(EinError::Dataset(
                "cannot mine patterns from an empty dataset".into(),
            ));
        }
        if maxpat < 1 {
            return Err(EinError::Dataset("maxpat must be at least 1".into()));
        }
        let mut forest = MiningForest {
            graphs,
            maxpat,
            node_cap: DEFAULT_NODE_CAP,
            nodes: Vec::new(),
            roots: Vec::new(),
            index: HashMap::new(),
        };
        let mut candidates: HashMap<CodeTuple, ProjectionStore> = HashMap::new();
        for (gi, g) in forest.graphs.iter().enumerate() {
            for &(u, v, le) in g.edges() {
                for (a, b) in [(u, v), (v, u)] {
                    let (la, lb) = (g.node_label(a), g.node_label(b));
                    if la > lb {
                        continue; // canonical orientation; both kept on ties
                    }
                    candidates
                        .entry(CodeTuple::new(0, 1, la, le, lb))
                        .or_insert_with(|| ProjectionStore::new(2))
                        .push(gi, &[a as u16, b as u16]);
                }
            }
        }
        let mut tuples: Vec<CodeTuple> = candidates.keys().copied().collect();
        tuples.sort_by(gspan_tuple_cmp);
        for t in tuples {
            let projections = candidates.remove(&t).unwrap();
            let mut support = Bitset::new(forest.graphs.len());
            for &g in &projections.graphs {
                support.set(g as usize);
            }
            let id =
                forest.push_node(DfsCode::new(vec![t]), support, Some(projections), None)?;
            forest.roots.push(id);
        }
        Ok(forest)
    }

    pub fn with_node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn instance_count(&self) -> usize {
        self.graphs.len()
    }

    pub fn maxpat(&self) -> usize {
        self.maxpat
    }

    pub fn graphs(&self) -> &[LabeledGraph] {
        &self.graphs
    }

    pub fn roots(&self) -> &[PatternId] {
        &self.roots
    }

    /// Number of materialized pattern nodes.
    pub fn pattern_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = PatternId> {
        (0..self.nodes.len()).map(PatternId)
    }

    pub fn node(&self, id: PatternId) -> &PatternNode {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: PatternId) -> &mut PatternNode {
        &mut self.nodes[id.0]
    }

    pub fn lookup(&self, code: &DfsCode) -> Option<PatternId> {
        self.index.get(code).copied()
    }

    fn push_node(
        &mut self,
        code: DfsCode,
        support: Bitset,
        projections: Option<ProjectionStore>,
        parent: Option<PatternId>,
    ) -> Result<PatternId> {
        if self.nodes.len() >= self.node_cap {
            return Err(EinError::NodeCap { cap: self.node_cap });
        }
        let id = PatternId(self.nodes.len());
        debug_assert!(!self.index.contains_key(&code), "duplicate pattern {code}");
        self.index.insert(code.clone(), id);
        self.nodes.push(PatternNode {
            code,
            support,
            projections,
            children: None,
            parent,
            beta: Vec::new(),
        });
        Ok(id)
    }

    /// The injective node maps of every occurrence, as (graph index,
    /// DFS index -> graph node) pairs. Regenerated from the code when the
    /// stored list was already dropped.
    pub fn embeddings(&self, id: PatternId) -> Vec<(usize, Vec<usize>)> {
        let node = &self.nodes[id.0];
        if let Some(store) = &node.projections {
            return (0..store.len())
                .map(|i| {
                    (
                        store.graph(i),
                        store.map(i).iter().map(|&v| v as usize).collect(),
                    )
                })
                .collect();
        }
        let mut out = Vec::new();
        for gi in node.support.ones() {
            for map in code_embeddings(&node.code, &self.graphs[gi]) {
                out.push((gi, map.iter().map(|&v| v as usize).collect()));
            }
        }
        out
    }

    /// Materializes (or retrieves) the children of a pattern: every minimal
    /// rightmost-path extension with nonzero support, in ascending code
    /// order. Returns the empty list at the size budget. The node's own
    /// occurrence list is dropped afterwards.
    ///
    /// Candidate generation already skips extensions whose code can never
    /// be minimal (a smaller edge or end label would re-root the code);
    /// the remaining candidates still go through the full minimality test.
    pub fn expand(&mut self, id: PatternId) -> Result<Vec<PatternId>> {
        if let Some(children) = &self.nodes[id.0].children {
            return Ok(children.clone());
        }
        if self.nodes[id.0].code.len() >= self.maxpat {
            self.nodes[id.0].children = Some(Vec::new());
            self.nodes[id.0].projections = None;
            return Ok(Vec::new());
        }
        let code = self.nodes[id.0].code.clone();
        let rm_tuples = code.rightmost_path();
        let rm_vertices = code.rightmost_path_vertices();
        let labels = code.vertex_labels();
        let rightmost = *rm_vertices.last().expect("nonempty code");
        let rightmost_label = labels[rightmost];
        let min_label = code.tuples[0].from_label;
        let new_vertex = code.node_count();
        let store = self.nodes[id.0]
            .projections
            .take()
            .unwrap_or_else(|| self.regenerate_projections(id));

        // Children at the size budget can never expand, so only their
        // supports are accumulated; the occurrence lists that dominate the
        // deepest level are never built.
        let keep_stores = code.len() + 1 < self.maxpat;
        let n = self.graphs.len();
        // Rightmost-path positions already connected to the rightmost
        // vertex in the code; such closing edges are consumed and cannot be
        // extensions. Map-independent, so computed once.
        let mut blocked_positions = 0u64;
        for t in &code.tuples {
            if !t.is_forward() && t.from == rightmost {
                if let Some(pos) = rm_vertices.iter().position(|&v| v == t.to) {
                    blocked_positions |= 1 << pos;
                }
            }
        }
        // The forward edge that discovered the rightmost vertex.
        blocked_positions |= 1 << (rm_vertices.len() - 2);
        let mut candidates: HashMap<CodeTuple, Candidate, FxBuildHasher> = HashMap::default();
        // Stamped scratch marks, resized when the projection stream moves
        // to a larger graph.
        let mut stamp = 1u32;
        let mut node_mark: Vec<u32> = Vec::new();
        // Graph node -> rightmost-path position, stamped the same way.
        let mut rm_pos: Vec<(u32, u16)> = Vec::new();
        for p in 0..store.len() {
            let gi = store.graph(p);
            let g = &self.graphs[gi];
            let map = store.map(p);
            stamp += 1;
            if node_mark.len() < g.node_count() {
                node_mark.resize(g.node_count(), 0);
                rm_pos.resize(g.node_count(), (0, 0));
            }
            for &v in map {
                node_mark[v as usize] = stamp;
            }
            for (pos, &v) in rm_vertices.iter().enumerate() {
                rm_pos[map[v] as usize] = (stamp, pos as u16);
            }

            // Backward: from the rightmost vertex to a rightmost-path
            // vertex, unless traversing the closing edge before that
            // vertex's own path edge would give a smaller code.
            let r_node = map[rightmost] as usize;
            for &(nbr, eidx) in g.neighbors(r_node) {
                if node_mark[nbr] != stamp {
                    continue;
                }
                let (s, pos) = rm_pos[nbr];
                if s != stamp
                    || pos as usize + 1 == rm_vertices.len()
                    || blocked_positions >> pos & 1 == 1
                {
                    continue;
                }
                let j = rm_vertices[pos as usize];
                // Path edge leaving j toward the rightmost vertex.
                let path_edge = &code.tuples[rm_tuples[rm_tuples.len() - 1 - pos as usize]];
                debug_assert_eq!(path_edge.from, j);
                let elabel = g.edge_label(eidx);
                if elabel < path_edge.edge_label
                    || (elabel == path_edge.edge_label
                        && labels[path_edge.to] > rightmost_label)
                {
                    continue;
                }
                let t = CodeTuple::new(rightmost, j, rightmost_label, elabel, labels[j]);
                candidates
                    .entry(t)
                    .or_insert_with(|| Candidate::new(n, keep_stores, map.len()))
                    .add(gi, map, None);
            }
            // Pure forward from the rightmost vertex: any unvisited
            // neighbor not below the root label.
            for &(nbr, eidx) in g.neighbors(r_node) {
                if node_mark[nbr] == stamp || g.node_label(nbr) < min_label {
                    continue;
                }
                let t = CodeTuple::new(
                    rightmost,
                    new_vertex,
                    rightmost_label,
                    g.edge_label(eidx),
                    g.node_label(nbr),
                );
                candidates
                    .entry(t)
                    .or_insert_with(|| Candidate::new(n, keep_stores, map.len() + 1))
                    .add(gi, map, Some(nbr as u16));
            }
            // Forward from the other rightmost-path vertices: the new edge
            // must not sort below that vertex's own path edge.
            for &ti in &rm_tuples {
                let path_edge = &code.tuples[ti];
                let v = path_edge.from;
                for &(nbr, eidx) in g.neighbors(map[v] as usize) {
                    if node_mark[nbr] == stamp {
                        continue;
                    }
                    let nbr_label = g.node_label(nbr);
                    if nbr_label < min_label {
                        continue;
                    }
                    let elabel = g.edge_label(eidx);
                    if elabel < path_edge.edge_label
                        || (elabel == path_edge.edge_label && labels[path_edge.to] > nbr_label)
                    {
                        continue;
                    }
                    let t = CodeTuple::new(v, new_vertex, labels[v], elabel, nbr_label);
                    candidates
                        .entry(t)
                        .or_insert_with(|| Candidate::new(n, keep_stores, map.len() + 1))
                        .add(gi, map, Some(nbr as u16));
                }
            }
        }
        drop(store);

        let mut tuples: Vec<CodeTuple> = candidates.keys().copied().collect();
        tuples.sort_by(gspan_tuple_cmp);
        let mut children = Vec::new();
        for t in tuples {
            let child_code = code.child(t);
            // Non-minimal extensions are duplicates of a pattern generated
            // elsewhere in the forest; drop them here.
            if !is_min_code(&child_code)? {
                continue;
            }
            let cand = candidates.remove(&t).unwrap();
            children.push(self.push_node(child_code, cand.support, cand.store, Some(id))?);
        }
        self.nodes[id.0].children = Some(children.clone());
        Ok(children)
    }

    /// Rebuilds the occurrence list of a node whose stored list was
    /// dropped. Only reachable if a cached subtree is expanded deeper after
    /// its frontier moved, which re-derives exactly the list expand needs.
    fn regenerate_projections(&self, id: PatternId) -> ProjectionStore {
        let node = &self.nodes[id.0];
        let mut store = ProjectionStore::new(node.code.node_count());
        for gi in node.support.ones() {
            for map in code_embeddings(&node.code, &self.graphs[gi]) {
                store.push(gi, &map);
            }
        }
        store
    }

    /// Fully expands the forest to the size budget and returns every
    /// materialized pattern. The count is the candidate-set size reported in
    /// mining statistics.
    pub fn enumerate_all(&mut self) -> Result<Vec<PatternId>> {
        let mut stack: Vec<PatternId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            let children = self.expand(id)?;
            stack.extend(children.into_iter().rev());
        }
        Ok(self.ids().collect())
    }
}

/// All embeddings of a code into one graph, in the code's own matching
/// order: each forward tuple binds an unvisited neighbor, each backward
/// tuple requires its unique closing edge.
pub fn code_embeddings(code: &DfsCode, g: &LabeledGraph) -> Vec<Vec<u16>> {
    fn extend(
        code: &DfsCode,
        g: &LabeledGraph,
        depth: usize,
        map: &mut Vec<u16>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<u16>>,
    ) {
        if depth == code.tuples.len() {
            out.push(map.clone());
            return;
        }
        let t = &code.tuples[depth];
        if t.is_forward() {
            let from = map[t.from] as usize;
            for &(nbr, eidx) in g.neighbors(from) {
                if used[nbr]
                    || g.node_label(nbr) != t.to_label
                    || g.edge_label(eidx) != t.edge_label
                {
                    continue;
                }
                map.push(nbr as u16);
                used[nbr] = true;
                extend(code, g, depth + 1, map, used, out);
                map.pop();
                used[nbr] = false;
            }
        } else {
            let (a, b) = (map[t.from] as usize, map[t.to] as usize);
            if g.edge_between(a, b)
                .is_some_and(|e| g.edge_label(e) == t.edge_label)
            {
                extend(code, g, depth + 1, map, used, out);
            }
        }
    }

    let mut out = Vec::new();
    if code.is_empty() {
        return out;
    }
    let t0 = &code.tuples[0];
    let mut used = vec![false; g.node_count()];
    for &(u, v, le) in g.edges() {
        if le != t0.edge_label {
            continue;
        }
        for (a, b) in [(u, v), (v, u)] {
            if (g.node_label(a), g.node_label(b)) == (t0.from_label, t0.to_label) {
                let mut map = vec![a as u16, b as u16];
                used[a] = true;
                used[b] = true;
                extend(code, g, 1, &mut map, &mut used, &mut out);
                used[a] = false;
                used[b] = false;
            }
        }
    }
    out
}
