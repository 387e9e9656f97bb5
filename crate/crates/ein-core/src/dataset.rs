//! Dataset ingestion: text-format parsers, synthetic generators, and
//! deterministic stratified splitting.
//!
//! Two file formats are supported. The TUDataset layout is a directory of
//! `<DS>_A.txt`, `<DS>_graph_indicator.txt`, `<DS>_graph_labels.txt`,
//! `<DS>_node_labels.txt` and optional `<DS>_edge_labels.txt`, with
//! 1-indexed global node ids and each undirected edge listed as two
//! directed rows. The gSpan layout is a single file of `t # <gid> <class>`,
//! `v <id> <label>`, `e <u> <v> <label>` lines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EinError, Result};
use crate::graph::LabeledGraph;

/// A labeled graph-classification dataset with dense label ids and the
/// dictionaries mapping them back to the original tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<LabeledGraph>,
    /// Dense class id per graph.
    pub labels: Vec<u32>,
    pub node_label_names: Vec<String>,
    pub edge_label_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl GraphDataset {
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<LabeledGraph>,
        labels: Vec<u32>,
        node_label_names: Vec<String>,
        edge_label_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(EinError::Dataset(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        for &y in &labels {
            if y as usize >= class_names.len() {
                return Err(EinError::Dataset(format!(
                    "class id {y} has no dictionary entry"
                )));
            }
        }
        Ok(GraphDataset {
            name: name.into(),
            graphs,
            labels,
            node_label_names,
            edge_label_names,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Sub-dataset of the given graph indices (shared dictionaries).
    fn subset(&self, indices: &[usize]) -> GraphDataset {
        GraphDataset {
            name: self.name.clone(),
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            node_label_names: self.node_label_names.clone(),
            edge_label_names: self.edge_label_names.clone(),
            class_names: self.class_names.clone(),
        }
    }
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> EinError {
    EinError::Parse {
        file: file.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Splits a line on whitespace and commas.
fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_int(file: &Path, line_no: usize, tok: &str) -> Result<i64> {
    tok.parse()
        .map_err(|_| parse_err(file, line_no, format!("expected an integer, got '{tok}'")))
}

/// Dense remap of arbitrary integer tokens, ascending: returns (id per
/// occurrence, dictionary of original tokens).
fn densify(values: &[i64]) -> (Vec<u32>, Vec<String>) {
    let uniq: BTreeSet<i64> = values.iter().copied().collect();
    let dict: Vec<i64> = uniq.into_iter().collect();
    let index: HashMap<i64, u32> = dict
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    (
        values.iter().map(|v| index[v]).collect(),
        dict.iter().map(|v| v.to_string()).collect(),
    )
}

/// Parses a TUDataset-style directory. Continuous attribute files are
/// ignored; only discrete node/edge labels are read.
pub fn parse_tud(dir: &Path) -> Result<GraphDataset> {
    let mut prefix = None;
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(p) = name.strip_suffix("_A.txt") {
            prefix = Some(p.to_string());
            break;
        }
    }
    let prefix = prefix.ok_or_else(|| {
        EinError::Dataset(format!("no <DS>_A.txt found in {}", dir.display()))
    })?;
    let file = |suffix: &str| dir.join(format!("{prefix}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator_lines = read_lines(&indicator_path)?;
    let mut node_graph = Vec::with_capacity(indicator_lines.len());
    for (i, line) in indicator_lines.iter().enumerate() {
        let gid = parse_int(&indicator_path, i + 1, line.trim())?;
        if gid < 1 {
            return Err(parse_err(&indicator_path, i + 1, "graph ids are 1-indexed"));
        }
        node_graph.push((gid - 1) as usize);
    }
    let n_nodes = node_graph.len();
    let n_graphs = node_graph.iter().max().map_or(0, |&g| g + 1);

    let labels_path = file("graph_labels");
    let label_lines = read_lines(&labels_path)?;
    if label_lines.len() != n_graphs {
        return Err(parse_err(
            &labels_path,
            label_lines.len(),
            format!("{n_graphs} graphs but {} label lines", label_lines.len()),
        ));
    }
    let mut raw_classes = Vec::with_capacity(n_graphs);
    for (i, line) in label_lines.iter().enumerate() {
        raw_classes.push(parse_int(&labels_path, i + 1, line.trim())?);
    }
    let (labels, class_names) = densify(&raw_classes);

    let node_labels_path = file("node_labels");
    let node_label_lines = read_lines(&node_labels_path)?;
    if node_label_lines.len() != n_nodes {
        return Err(parse_err(
            &node_labels_path,
            node_label_lines.len(),
            format!(
                "{n_nodes} nodes in the indicator but {} node label lines",
                node_label_lines.len()
            ),
        ));
    }
    let mut raw_node_labels = Vec::with_capacity(n_nodes);
    for (i, line) in node_label_lines.iter().enumerate() {
        raw_node_labels.push(parse_int(&node_labels_path, i + 1, line.trim())?);
    }
    let (node_labels, node_label_names) = densify(&raw_node_labels);

    let edges_path = file("A");
    let edge_lines = read_lines(&edges_path)?;
    let edge_labels_path = file("edge_labels");
    let raw_edge_labels: Option<Vec<i64>> = if edge_labels_path.exists() {
        let lines = read_lines(&edge_labels_path)?;
        if lines.len() != edge_lines.len() {
            return Err(parse_err(
                &edge_labels_path,
                lines.len(),
                format!(
                    "{} edge rows but {} edge label lines",
                    edge_lines.len(),
                    lines.len()
                ),
            ));
        }
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            out.push(parse_int(&edge_labels_path, i + 1, line.trim())?);
        }
        Some(out)
    } else {
        None
    };

    // Per-graph local node ids in ascending global order.
    let mut local_id = vec![0usize; n_nodes];
    let mut graph_nodes: Vec<Vec<u32>> = vec![Vec::new(); n_graphs];
    for (global, &g) in node_graph.iter().enumerate() {
        local_id[global] = graph_nodes[g].len();
        graph_nodes[g].push(node_labels[global]);
    }

    // Each undirected edge is deduplicated from its two directed rows.
    let mut graph_edges: Vec<BTreeMap<(usize, usize), i64>> = vec![BTreeMap::new(); n_graphs];
    for (i, line) in edge_lines.iter().enumerate() {
        let toks = tokens(line);
        if toks.len() != 2 {
            return Err(parse_err(&edges_path, i + 1, "expected two node ids"));
        }
        let u = parse_int(&edges_path, i + 1, toks[0])?;
        let v = parse_int(&edges_path, i + 1, toks[1])?;
        if u < 1 || v < 1 || u as usize > n_nodes || v as usize > n_nodes {
            return Err(parse_err(&edges_path, i + 1, format!("dangling node id in ({u}, {v})")));
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if node_graph[u] != node_graph[v] {
            return Err(parse_err(&edges_path, i + 1, "edge endpoints belong to different graphs"));
        }
        let g = node_graph[u];
        let key = (local_id[u].min(local_id[v]), local_id[u].max(local_id[v]));
        let label = raw_edge_labels.as_ref().map_or(0, |l| l[i]);
        if let Some(&prev) = graph_edges[g].get(&key) {
            if prev != label {
                return Err(parse_err(
                    &edges_path,
                    i + 1,
                    "directed rows of one undirected edge disagree on the edge label",
                ));
            }
        } else {
            graph_edges[g].insert(key, label);
        }
    }

    let (edge_label_map, edge_label_names) = if raw_edge_labels.is_some() {
        let all: Vec<i64> = graph_edges
            .iter()
            .flat_map(|m| m.values().copied())
            .collect();
        let (_, names) = densify(&all);
        let index: HashMap<i64, u32> = names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.parse().unwrap(), i as u32))
            .collect();
        (Some(index), names)
    } else {
        (None, vec!["0".to_string()])
    };

    let mut graphs = Vec::with_capacity(n_graphs);
    for g in 0..n_graphs {
        let edges = graph_edges[g]
            .iter()
            .map(|(&(u, v), &l)| {
                let label = edge_label_map.as_ref().map_or(0, |m| m[&l]);
                (u, v, label)
            })
            .collect();
        graphs.push(
            LabeledGraph::new(graph_nodes[g].clone(), edges)
                .map_err(|e| EinError::Dataset(format!("graph {g}: {e}")))?,
        );
    }

    GraphDataset::new(
        prefix,
        graphs,
        labels,
        node_label_names,
        edge_label_names,
        class_names,
    )
}

/// Parses a gSpan-style transaction file; one graph per `t` block with the
/// class label on the `t` line.
pub fn parse_gspan(path: &Path) -> Result<GraphDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_gspan_str(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "gspan".into()),
        &text,
        path,
    )
}

pub fn parse_gspan_str(name: impl Into<String>, text: &str, origin: &Path) -> Result<GraphDataset> {
    struct Block {
        class: i64,
        node_labels: Vec<i64>,
        node_ids: HashMap<i64, usize>,
        edges: Vec<(usize, usize, i64)>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "t" => {
                // "t # <gid> <class>"
                if toks.len() < 4 || toks[1] != "#" {
                    return Err(parse_err(origin, line_no, "expected 't # <gid> <class>'"));
                }
                let class = parse_int(origin, line_no, toks[3])?;
                blocks.push(Block {
                    class,
                    node_labels: Vec::new(),
                    node_ids: HashMap::new(),
                    edges: Vec::new(),
                });
            }
            "v" => {
                if toks.len() != 3 {
                    return Err(parse_err(origin, line_no, "expected 'v <id> <label>'"));
                }
                let block = blocks
                    .last_mut()
                    .ok_or_else(|| parse_err(origin, line_no, "'v' line before any 't' line"))?;
                let id = parse_int(origin, line_no, toks[1])?;
                let label = parse_int(origin, line_no, toks[2])?;
                if block.node_ids.contains_key(&id) {
                    return Err(parse_err(origin, line_no, format!("duplicate node id {id}")));
                }
                block.node_ids.insert(id, block.node_labels.len());
                block.node_labels.push(label);
            }
            "e" => {
                if toks.len() != 4 {
                    return Err(parse_err(origin, line_no, "expected 'e <u> <v> <label>'"));
                }
                let block = blocks
                    .last_mut()
                    .ok_or_else(|| parse_err(origin, line_no, "'e' line before any 't' line"))?;
                if block.node_labels.is_empty() {
                    return Err(parse_err(origin, line_no, "'e' line before any 'v' line"));
                }
                let u = parse_int(origin, line_no, toks[1])?;
                let v = parse_int(origin, line_no, toks[2])?;
                let label = parse_int(origin, line_no, toks[3])?;
                let &ui = block
                    .node_ids
                    .get(&u)
                    .ok_or_else(|| parse_err(origin, line_no, format!("unknown node id {u}")))?;
                let &vi = block
                    .node_ids
                    .get(&v)
                    .ok_or_else(|| parse_err(origin, line_no, format!("unknown node id {v}")))?;
                block.edges.push((ui, vi, label));
            }
            other => {
                return Err(parse_err(origin, line_no, format!("unknown line kind '{other}'")));
            }
        }
    }

    let raw_classes: Vec<i64> = blocks.iter().map(|b| b.class).collect();
    let (labels, class_names) = densify(&raw_classes);
    let all_node_labels: Vec<i64> = blocks.iter().flat_map(|b| b.node_labels.clone()).collect();
    let (_, node_label_names) = densify(&all_node_labels);
    let node_index: HashMap<i64, u32> = node_label_names
        .iter()
        .enumerate()
        .map(|(i, v)| (v.parse().unwrap(), i as u32))
        .collect();
    let all_edge_labels: Vec<i64> = blocks
        .iter()
        .flat_map(|b| b.edges.iter().map(|e| e.2))
        .collect();
    let (_, edge_label_names) = if all_edge_labels.is_empty() {
        (Vec::new(), vec!["0".to_string()])
    } else {
        densify(&all_edge_labels)
    };
    let edge_index: HashMap<i64, u32> = edge_label_names
        .iter()
        .enumerate()
        .map(|(i, v)| (v.parse().unwrap(), i as u32))
        .collect();

    let mut graphs = Vec::with_capacity(blocks.len());
    for (gi, b) in blocks.iter().enumerate() {
        let node_labels: Vec<u32> = b.node_labels.iter().map(|l| node_index[l]).collect();
        let edges: Vec<(usize, usize, u32)> = b
            .edges
            .iter()
            .map(|&(u, v, l)| (u, v, edge_index[&l]))
            .collect();
        graphs.push(
            LabeledGraph::new(node_labels, edges)
                .map_err(|e| EinError::Dataset(format!("graph {gi}: {e}")))?,
        );
    }
    GraphDataset::new(
        name,
        graphs,
        labels,
        node_label_names,
        edge_label_names,
        class_names,
    )
}

/// Serializes a dataset in the gSpan text format; `parse_gspan` of the
/// output reproduces the dataset.
pub fn to_gspan_string(ds: &GraphDataset) -> String {
    let mut out = String::new();
    for (gi, g) in ds.graphs.iter().enumerate() {
        let class = &ds.class_names[ds.labels[gi] as usize];
        out.push_str(&format!("t # {gi} {class}\n"));
        for v in 0..g.node_count() {
            out.push_str(&format!(
                "v {v} {}\n",
                ds.node_label_names[g.node_label(v) as usize]
            ));
        }
        for &(u, v, l) in g.edges() {
            out.push_str(&format!("e {u} {v} {}\n", ds.edge_label_names[l as usize]));
        }
    }
    out
}

pub fn write_gspan(ds: &GraphDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_gspan_string(ds))?;
    Ok(())
}

// === Synthetic generators ===
//
// Instances are a small random connected base graph (node label 0) with
// marker components (node label 1) attached: a 16-node component containing
// an 8-cycle, one containing a 9-cycle, and a 16-node tree used as padding.
// Components attach by connecting 3..=6 of their nodes to one random base
// node.

const MARKER_NODES: usize = 16;

fn attach_component(
    nodes: &mut Vec<u32>,
    edges: &mut Vec<(usize, usize, u32)>,
    base_nodes: usize,
    component_edges: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
) {
    let offset = nodes.len();
    nodes.extend(std::iter::repeat_n(1u32, MARKER_NODES));
    for &(u, v) in component_edges {
        edges.push((offset + u, offset + v, 0));
    }
    let n_connect = rng.gen_range(3..=6usize);
    let mut comp: Vec<usize> = (0..MARKER_NODES).collect();
    comp.shuffle(rng);
    let base = rng.gen_range(0..base_nodes);
    for &c in &comp[..n_connect] {
        edges.push((offset + c, base, 0));
    }
}

/// Cycle of `len` nodes plus a path tail bringing the total to 16 nodes.
fn cycle_component(len: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..len).map(|i| (i, (i + 1) % len)).collect();
    edges.push((0, len));
    for i in len..MARKER_NODES - 1 {
        edges.push((i, i + 1));
    }
    edges
}

/// Balanced binary tree on 16 nodes; contains no cycle of any length.
fn padding_component() -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..MARKER_NODES {
        for c in [2 * i + 1, 2 * i + 2] {
            if c < MARKER_NODES {
                edges.push((i, c));
            }
        }
    }
    edges
}

/// Random connected base graph: 5..=10 nodes with label 0, at most 20
/// uniformly chosen edges, regenerated until connected.
fn random_base(rng: &mut ChaCha8Rng) -> (Vec<u32>, Vec<(usize, usize, u32)>) {
    loop {
        let n = rng.gen_range(5..=10usize);
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        pairs.shuffle(rng);
        let m = rng.gen_range(1..=20.min(pairs.len()));
        let edges: Vec<(usize, usize, u32)> =
            pairs[..m].iter().map(|&(u, v)| (u, v, 0)).collect();
        let g = LabeledGraph::new(vec![0; n], edges.clone()).expect("well-formed base");
        if g.is_connected() {
            return (vec![0; n], edges);
        }
    }
}

fn build_instance(rng: &mut ChaCha8Rng, with_8: bool, with_9: bool, paddings: usize) -> LabeledGraph {
    let (mut nodes, mut edges) = random_base(rng);
    let base_nodes = nodes.len();
    if with_8 {
        attach_component(&mut nodes, &mut edges, base_nodes, &cycle_component(8), rng);
    }
    if with_9 {
        attach_component(&mut nodes, &mut edges, base_nodes, &cycle_component(9), rng);
    }
    for _ in 0..paddings {
        attach_component(&mut nodes, &mut edges, base_nodes, &padding_component(), rng);
    }
    LabeledGraph::new(nodes, edges).expect("well-formed instance")
}

/// Two-class dataset: positives carry the 8-cycle component, negatives the
/// 9-cycle component. `n_per_class` instances each.
pub fn gen_cycle(n_per_class: usize, seed: u64) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        graphs.push(build_instance(&mut rng, true, false, 0));
        labels.push(1);
    }
    for _ in 0..n_per_class {
        graphs.push(build_instance(&mut rng, false, true, 0));
        labels.push(0);
    }
    GraphDataset::new(
        "cycle",
        graphs,
        labels,
        vec!["0".into(), "1".into()],
        vec!["0".into()],
        vec!["0".into(), "1".into()],
    )
    .expect("generator output is well formed")
}

/// Four-quadrant dataset labeled by the XOR of the two cycle components;
/// padding trees keep the count of label-1 nodes at 32 for every graph.
pub fn gen_cycle_xor(n_per_quadrant: usize, seed: u64) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(4 * n_per_quadrant);
    let mut labels = Vec::with_capacity(4 * n_per_quadrant);
    for (with_8, with_9) in [(false, false), (true, false), (false, true), (true, true)] {
        let paddings = 2 - usize::from(with_8) - usize::from(with_9);
        for _ in 0..n_per_quadrant {
            graphs.push(build_instance(&mut rng, with_8, with_9, paddings));
            labels.push(u32::from(with_8 ^ with_9));
        }
    }
    GraphDataset::new(
        "cycle_xor",
        graphs,
        labels,
        vec!["0".into(), "1".into()],
        vec!["0".into()],
        vec!["0".into(), "1".into()],
    )
    .expect("generator output is well formed")
}

/// Stratified 6:2:2 shuffle split, deterministic per seed. Within each
/// class the validation and test parts take floor(m/5) instances each and
/// the remainder goes to train.
pub fn split(
    ds: &GraphDataset,
    seed: u64,
) -> Result<(GraphDataset, GraphDataset, GraphDataset)> {
    if ds.len() < 5 {
        return Err(EinError::Split(format!(
            "need at least 5 instances to split, got {}",
            ds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for class in 0..ds.class_count() as u32 {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let m = idx.len();
        let n_valid = m / 5;
        let n_test = m / 5;
        let n_train = m - n_valid - n_test;
        train.extend_from_slice(&idx[..n_train]);
        valid.extend_from_slice(&idx[n_train..n_train + n_valid]);
        test.extend_from_slice(&idx[n_train + n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();
    for class in 0..ds.class_count() as u32 {
        if ds.labels.iter().any(|&y| y == class)
            && !train.iter().any(|&i| ds.labels[i] == class)
        {
            return Err(EinError::Split(format!(
                "class {class} absent from the training split"
            )));
        }
    }
    Ok((ds.subset(&train), ds.subset(&valid), ds.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs_code::min_code;
    use crate::graph::contains_subgraph;

    #[test]
    fn gspan_single_block() {
        let text = "t # 0 1\nv 0 0\nv 1 1\ne 0 1 0\n";
        let ds = parse_gspan_str("toy", text, Path::new("toy.gspan")).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].edge_count(), 1);
        assert_eq!(ds.labels, vec![0]);
    }

    #[test]
    fn gspan_edge_before_vertex_is_an_error() {
        let text = "t # 0 1\ne 0 1 0\n";
        let err = parse_gspan_str("toy", text, Path::new("toy.gspan")).unwrap_err();
        assert!(matches!(err, EinError::Parse { line: 2, .. }));
    }

    #[test]
    fn gspan_round_trip() {
        let ds = gen_cycle(3, 99);
        let text = to_gspan_string(&ds);
        let back = parse_gspan_str("cycle", &text, Path::new("cycle.gspan")).unwrap();
        assert_eq!(back.graphs, ds.graphs);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.class_names, ds.class_names);
    }

    fn write_tud(dir: &Path, prefix: &str, files: &[(&str, &str)]) {
        for (suffix, content) in files {
            std::fs::write(dir.join(format!("{prefix}_{suffix}.txt")), content).unwrap();
        }
    }

    #[test]
    fn tud_minimal_directory() {
        let tmp = tempfile::tempdir().unwrap();
        write_tud(
            tmp.path(),
            "TOY",
            &[
                ("A", "1, 2\n2, 1\n"),
                ("graph_indicator", "1\n1\n"),
                ("graph_labels", "1\n"),
                ("node_labels", "3\n5\n"),
            ],
        );
        let ds = parse_tud(tmp.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].node_count(), 2);
        // The two directed rows collapse into a single undirected edge.
        assert_eq!(ds.graphs[0].edge_count(), 1);
        assert_eq!(ds.node_label_names, vec!["3", "5"]);
    }

    #[test]
    fn tud_five_graph_fixture_matches_hand_count() {
        // Five graphs shaped like small molecules: a triangle, a 4-path, a
        // 4-star, a square, and a single edge. 17 nodes, 13 undirected
        // edges in total, hand-counted.
        let tmp = tempfile::tempdir().unwrap();
        let mut a = String::new();
        let mut indicator = String::new();
        let mut node_labels = String::new();
        let mut add_graph = |gid: usize, labels: &[i64], edges: &[(usize, usize)], base: &mut usize| {
            for &l in labels {
                indicator.push_str(&format!("{}\n", gid + 1));
                node_labels.push_str(&format!("{l}\n"));
            }
            for &(u, v) in edges {
                a.push_str(&format!("{}, {}\n", *base + u + 1, *base + v + 1));
                a.push_str(&format!("{}, {}\n", *base + v + 1, *base + u + 1));
            }
            *base += labels.len();
        };
        let mut base = 0;
        add_graph(0, &[0, 0, 1], &[(0, 1), (1, 2), (2, 0)], &mut base);
        add_graph(1, &[0, 1, 0, 1], &[(0, 1), (1, 2), (2, 3)], &mut base);
        add_graph(2, &[1, 0, 0, 0, 0], &[(0, 1), (0, 2), (0, 3), (0, 4)], &mut base);
        add_graph(3, &[0, 0, 0, 0], &[(0, 1), (1, 2), (2, 3), (3, 0)], &mut base);
        add_graph(4, &[1, 1], &[(0, 1)], &mut base);
        write_tud(
            tmp.path(),
            "FIX",
            &[
                ("A", &a),
                ("graph_indicator", &indicator),
                ("graph_labels", "1\n-1\n1\n-1\n1\n"),
                ("node_labels", &node_labels),
            ],
        );
        let ds = parse_tud(tmp.path()).unwrap();
        assert_eq!(ds.len(), 5);
        let node_counts: Vec<usize> = ds.graphs.iter().map(|g| g.node_count()).collect();
        assert_eq!(node_counts, vec![3, 4, 5, 4, 2]);
        let edge_counts: Vec<usize> = ds.graphs.iter().map(|g| g.edge_count()).collect();
        assert_eq!(edge_counts, vec![3, 3, 4, 4, 1]);
        // Classes -1 and 1 densify to 0 and 1.
        assert_eq!(ds.labels, vec![1, 0, 1, 0, 1]);
        assert_eq!(ds.class_names, vec!["-1", "1"]);
    }

    #[test]
    fn tud_dangling_node_id_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_tud(
            tmp.path(),
            "BAD",
            &[
                ("A", "1, 9\n"),
                ("graph_indicator", "1\n1\n"),
                ("graph_labels", "1\n"),
                ("node_labels", "0\n0\n"),
            ],
        );
        let err = parse_tud(tmp.path()).unwrap_err();
        assert!(matches!(err, EinError::Parse { line: 1, .. }));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_cycle(5, 7), gen_cycle(5, 7));
        assert_eq!(gen_cycle_xor(2, 7), gen_cycle_xor(2, 7));
        assert_ne!(gen_cycle(5, 7), gen_cycle(5, 8));
    }

    #[test]
    fn cycle_xor_has_exactly_32_marker_nodes_per_graph() {
        let ds = gen_cycle_xor(3, 1);
        assert_eq!(ds.len(), 12);
        for g in &ds.graphs {
            let marked = (0..g.node_count()).filter(|&v| g.node_label(v) == 1).count();
            assert_eq!(marked, 32);
        }
        // Class balance: each quadrant contributes 3; XOR gives 6/6.
        assert_eq!(ds.labels.iter().filter(|&&y| y == 1).count(), 6);
    }

    fn marker_cycle(len: usize) -> LabeledGraph {
        let edges: Vec<(usize, usize, u32)> = (0..len).map(|i| (i, (i + 1) % len, 0)).collect();
        LabeledGraph::new(vec![1; len], edges).unwrap()
    }

    #[test]
    fn cycle_positives_contain_an_8_cycle_of_marked_nodes_and_negatives_do_not() {
        let ds = gen_cycle(6, 3);
        let c8 = marker_cycle(8);
        for (g, &y) in ds.graphs.iter().zip(&ds.labels) {
            assert_eq!(contains_subgraph(&c8, g), y == 1);
        }
    }

    #[test]
    fn marker_components_have_the_advertised_shape() {
        let c8 = cycle_component(8);
        let c9 = cycle_component(9);
        let pad = padding_component();
        assert_eq!(c8.len(), 16); // 8-cycle + 8-node tail
        assert_eq!(c9.len(), 16); // 9-cycle + 7-node tail
        assert_eq!(pad.len(), 15); // tree
        let as_graph = |edges: &[(usize, usize)]| {
            LabeledGraph::new(
                vec![1; MARKER_NODES],
                edges.iter().map(|&(u, v)| (u, v, 0)).collect(),
            )
            .unwrap()
        };
        let g8 = as_graph(&c8);
        let g9 = as_graph(&c9);
        let gp = as_graph(&pad);
        assert!(g8.is_connected() && g9.is_connected() && gp.is_connected());
        assert!(contains_subgraph(&marker_cycle(8), &g8));
        assert!(!contains_subgraph(&marker_cycle(9), &g8));
        assert!(contains_subgraph(&marker_cycle(9), &g9));
        assert!(!contains_subgraph(&marker_cycle(8), &g9));
        assert!(!contains_subgraph(&marker_cycle(8), &gp));
        assert!(!contains_subgraph(&marker_cycle(9), &gp));
    }

    #[test]
    fn split_single_class_ten() {
        let g = LabeledGraph::new(vec![0, 0], vec![(0, 1, 0)]).unwrap();
        let ds = GraphDataset::new(
            "ten",
            vec![g; 10],
            vec![0; 10],
            vec!["0".into()],
            vec!["0".into()],
            vec!["0".into()],
        )
        .unwrap();
        let (train, valid, test) = split(&ds, 0).unwrap();
        assert_eq!((train.len(), valid.len(), test.len()), (6, 2, 2));
    }

    #[test]
    fn split_is_stratified_and_partitions_the_dataset() {
        let ds = gen_cycle(50, 5);
        let (train, valid, test) = split(&ds, 11).unwrap();
        assert_eq!((train.len(), valid.len(), test.len()), (60, 20, 20));
        for part in [&train, &valid, &test] {
            let pos = part.labels.iter().filter(|&&y| y == 1).count();
            assert_eq!(pos * 2, part.len(), "balanced classes stay balanced");
        }
        // Union equals the dataset; multiset equality via canonical codes.
        let mut all_codes: Vec<String> = [&train, &valid, &test]
            .iter()
            .flat_map(|p| p.graphs.iter().map(|g| min_code(g).unwrap().to_string()))
            .collect();
        let mut orig_codes: Vec<String> = ds
            .graphs
            .iter()
            .map(|g| min_code(g).unwrap().to_string())
            .collect();
        all_codes.sort();
        orig_codes.sort();
        assert_eq!(all_codes, orig_codes);
    }

    #[test]
    fn split_rejects_tiny_datasets() {
        let g = LabeledGraph::new(vec![0, 0], vec![(0, 1, 0)]).unwrap();
        let ds = GraphDataset::new(
            "tiny",
            vec![g; 4],
            vec![0; 4],
            vec!["0".into()],
            vec!["0".into()],
            vec!["0".into()],
        )
        .unwrap();
        assert!(split(&ds, 0).is_err());
    }
}
