//! Graph text format: a `nodes:` header declaring the variable list (so
//! isolated nodes survive round trips), then one edge per line, `A -> B`
//! directed or `A -- B` undirected. Whitespace-insensitive; `#` begins a
//! comment line.

use crate::graph::{MixedGraph, NodeId};
use rustc_hash::FxHashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphTextError {
    #[error("missing 'nodes:' header before edges")]
    MissingHeader,
    #[error("line {line}: unknown node '{name}'")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: expected 'A -> B' or 'A -- B'")]
    BadEdge { line: usize },
    #[error("line {line}: pair already carries an edge")]
    DuplicateEdge { line: usize },
    #[error("node name '{name}' is empty or contains a reserved token")]
    BadName { name: String },
    #[error("duplicate node name '{name}'")]
    DuplicateName { name: String },
    #[error("node sets differ: cannot align graphs")]
    NameSetMismatch,
}

fn validate_name(name: &str) -> Result<(), GraphTextError> {
    let bad = name.is_empty()
        || name.contains("->")
        || name.contains("--")
        || name.contains(',')
        || name.contains('#')
        || name.chars().any(char::is_whitespace);
    if bad {
        return Err(GraphTextError::BadName {
            name: name.to_string(),
        });
    }
    Ok(())
}

/// Serializes a graph with its variable names; the inverse of
/// [`parse_graph_text`], byte-stable for a given graph.
pub fn write_graph_text(names: &[String], g: &MixedGraph) -> String {
    assert_eq!(names.len(), g.n_nodes(), "one name per node");
    for name in names {
        validate_name(name).expect("node names must avoid reserved tokens");
    }
    let mut out = String::new();
    out.push_str("nodes: ");
    out.push_str(&names.join(","));
    out.push('\n');
    for (t, h) in g.directed_edges() {
        out.push_str(&format!("{} -> {}\n", names[t.index()], names[h.index()]));
    }
    for (a, b) in g.undirected_edges() {
        out.push_str(&format!("{} -- {}\n", names[a.index()], names[b.index()]));
    }
    out
}

/// Parses the graph text format back into names plus a graph.
pub fn parse_graph_text(text: &str) -> Result<(Vec<String>, MixedGraph), GraphTextError> {
    let mut names: Option<Vec<String>> = None;
    let mut index: FxHashMap<String, usize> = FxHashMap::default();
    let mut graph: Option<MixedGraph> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("nodes:") {
            let parsed: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
            for name in &parsed {
                validate_name(name)?;
                if index.insert(name.clone(), index.len()).is_some() {
                    return Err(GraphTextError::DuplicateName { name: name.clone() });
                }
            }
            graph = Some(MixedGraph::new(parsed.len()));
            names = Some(parsed);
            continue;
        }
        let g = graph.as_mut().ok_or(GraphTextError::MissingHeader)?;
        let line_no = lineno + 1;
        let (lhs, rhs, directed) = if let Some((l, r)) = line.split_once("->") {
            (l, r, true)
        } else if let Some((l, r)) = line.split_once("--") {
            (l, r, false)
        } else {
            return Err(GraphTextError::BadEdge { line: line_no });
        };
        let resolve = |s: &str| -> Result<NodeId, GraphTextError> {
            index
                .get(s.trim())
                .map(|&i| NodeId(i))
                .ok_or_else(|| GraphTextError::UnknownNode {
                    line: line_no,
                    name: s.trim().to_string(),
                })
        };
        let (a, b) = (resolve(lhs)?, resolve(rhs)?);
        if a == b || g.adjacent(a, b) {
            return Err(GraphTextError::DuplicateEdge { line: line_no });
        }
        if directed {
            g.add_directed(a, b);
        } else {
            g.add_undirected(a, b);
        }
    }

    match (names, graph) {
        (Some(n), Some(g)) => Ok((n, g)),
        _ => Err(GraphTextError::MissingHeader),
    }
}

/// Re-indexes `g` (whose nodes are named `from`) into the index space of
/// `to`; the two name lists must contain the same names, in any order.
pub fn align_graph(
    g: &MixedGraph,
    from: &[String],
    to: &[String],
) -> Result<MixedGraph, GraphTextError> {
    if from.len() != to.len() {
        return Err(GraphTextError::NameSetMismatch);
    }
    let target: FxHashMap<&str, usize> = to
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut map = vec![0usize; from.len()];
    for (i, name) in from.iter().enumerate() {
        map[i] = *target
            .get(name.as_str())
            .ok_or(GraphTextError::NameSetMismatch)?;
    }
    let mut out = MixedGraph::new(g.n_nodes());
    for (t, h) in g.directed_edges() {
        out.add_directed(NodeId(map[t.index()]), NodeId(map[h.index()]));
    }
    for (a, b) in g.undirected_edges() {
        out.add_undirected(NodeId(map[a.index()]), NodeId(map[b.index()]));
    }
    Ok(out)
}
