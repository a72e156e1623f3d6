use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Graph, GraphError};

/// Parses `u v` lines into a graph. `#` starts a comment; blank lines are
/// skipped. Ids are relabeled to `0..n` in increasing order of the original
/// id, and the originals stay available through [`Graph::label`].
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let mut id = |what: &str| -> Result<u64, GraphError> {
            let tok = fields.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: format!("missing {what} endpoint"),
            })?;
            tok.parse::<u64>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("`{tok}` is not a nonnegative integer"),
            })
        };
        let u = id("first")?;
        let v = id("second")?;
        if let Some(extra) = fields.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected token `{extra}`"),
            });
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }

    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v) in &raw {
        index.insert(u, 0);
        index.insert(v, 0);
    }
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let labels: Vec<u64> = index.keys().copied().collect();
    let mut seen = std::collections::HashSet::new();
    for &(u, v) in &raw {
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
    }
    let edges = raw.iter().map(|(u, v)| (index[u], index[v]));
    Ok(Graph::from_edges(labels.len(), edges)?.with_labels(labels))
}

/// Serializes the graph as an edge list using original labels.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{} {}", g.label(u), g.label(v));
    }
    out
}
