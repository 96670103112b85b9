//! Textual graph inputs: the compact one-line notation and the JSON graph file.

use serde::{Deserialize, Serialize};

use super::{Graph, LengthFunction, VertexWeight};
use crate::error::{Error, Result};

/// Inputs larger than this are rejected before any allocation proportional
/// to the vertex count happens.
pub const MAX_VERTICES: usize = 4096;

/// Parses the compact notation `"<n> vertices; edges <e>,<e>,..."`.
///
/// An edge is either two adjacent digits (`12`, only for graphs with at most
/// nine vertices) or two 1-based labels separated by a dash (`10-11`).
pub fn parse_graph(text: &str) -> Result<Graph> {
    let (head, tail) = text
        .split_once(';')
        .ok_or_else(|| Error::Parse("expected `<n> vertices; edges ...`".into()))?;
    let mut head_words = head.split_whitespace();
    let n: usize = head_words
        .next()
        .ok_or_else(|| Error::Parse("missing vertex count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("vertex count: {e}")))?;
    match head_words.next() {
        Some("vertices") | Some("vertex") => {}
        other => return Err(Error::Parse(format!("expected `vertices`, found {other:?}"))),
    }
    if head_words.next().is_some() {
        return Err(Error::Parse("trailing text before `;`".into()));
    }
    if n == 0 || n > MAX_VERTICES {
        return Err(Error::Parse(format!("vertex count {n} outside 1..={MAX_VERTICES}")));
    }
    let tail = tail.trim();
    let list = tail
        .strip_prefix("edges")
        .ok_or_else(|| Error::Parse("expected `edges` after `;`".into()))?;
    let mut pairs = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::Parse("empty edge item".into()));
        }
        pairs.push(parse_edge_item(item, n)?);
    }
    Graph::from_one_based(n, pairs)
}

fn parse_edge_item(item: &str, n: usize) -> Result<(usize, usize)> {
    let label = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("edge {item:?}: {e}")))
    };
    if let Some((a, b)) = item.split_once('-') {
        return Ok((label(a)?, label(b)?));
    }
    let digits: Vec<u32> = item.chars().filter_map(|c| c.to_digit(10)).collect();
    if digits.len() != 2 || item.chars().count() != 2 {
        return Err(Error::Parse(format!(
            "edge {item:?}: use two digits or `u-v`"
        )));
    }
    if n > 9 {
        return Err(Error::Parse(format!(
            "edge {item:?}: digit-pair edges are ambiguous with {n} vertices"
        )));
    }
    Ok((digits[0] as usize, digits[1] as usize))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraphFile {
    vertices: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertex_weights: Option<Vec<f64>>,
}

/// Contents of a JSON graph file.
///
/// ```json
/// { "vertices": 3, "edges": [[1, 2], [2, 3]], "lengths": [0.25, 0.25] }
/// ```
///
/// `edges` are 1-based vertex pairs. `lengths` is aligned with `edges`;
/// `vertex_weights` with vertices `1..=vertices`. Unknown fields are rejected.
#[derive(Debug, Clone)]
pub struct GraphFile {
    pub graph: Graph,
    pub lengths: Option<LengthFunction>,
    pub vertex_weights: Option<VertexWeight>,
}

impl GraphFile {
    pub fn new(graph: Graph) -> Self {
        GraphFile {
            graph,
            lengths: None,
            vertex_weights: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawGraphFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.vertices == 0 || raw.vertices > MAX_VERTICES {
            return Err(Error::Parse(format!(
                "vertex count {} outside 1..={MAX_VERTICES}",
                raw.vertices
            )));
        }
        let graph = Graph::from_one_based(raw.vertices, raw.edges.iter().map(|&[a, b]| (a, b)))?;
        let lengths = match raw.lengths {
            Some(values) => {
                if values.len() != graph.edge_count() {
                    return Err(Error::DimensionMismatch {
                        expected: graph.edge_count(),
                        got: values.len(),
                    });
                }
                Some(LengthFunction::new(values)?)
            }
            None => None,
        };
        let vertex_weights = match raw.vertex_weights {
            Some(values) => {
                if values.len() != graph.vertex_count() {
                    return Err(Error::DimensionMismatch {
                        expected: graph.vertex_count(),
                        got: values.len(),
                    });
                }
                Some(VertexWeight::new(values)?)
            }
            None => None,
        };
        Ok(GraphFile {
            graph,
            lengths,
            vertex_weights,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawGraphFile {
            vertices: self.graph.vertex_count(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|e| [e.u + 1, e.v + 1])
                .collect(),
            lengths: self.lengths.as_ref().map(|l| l.values().to_vec()),
            vertex_weights: self.vertex_weights.as_ref().map(|w| w.values().to_vec()),
        };
        serde_json::to_string_pretty(&raw).expect("graph file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GraphDefect;

    #[test]
    fn compact_p3_and_star() {
        let g = parse_graph("3 vertices; edges 12,23").unwrap();
        assert_eq!(g, Graph::path(3).unwrap());
        let g = parse_graph("4 vertices; edges 12,13,14").unwrap();
        assert_eq!(g, Graph::star(3).unwrap());
    }

    #[test]
    fn compact_dash_labels() {
        let g = parse_graph("11 vertices; edges 1-2, 2-3, 3-4, 4-5, 5-6, 6-7, 7-8, 8-9, 9-10, 10-11")
            .unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(parse_graph("11 vertices; edges 12").is_err());
    }

    #[test]
    fn compact_disconnected() {
        assert!(matches!(
            parse_graph("3 vertices; edges 12"),
            Err(Error::InvalidGraph(GraphDefect::Disconnected { unreachable: 2 }))
        ));
    }

    #[test]
    fn compact_malformed() {
        for bad in [
            "",
            "3 vertices",
            "x vertices; edges 12",
            "3 nodes; edges 12,23",
            "3 vertices; edges 12,,23",
            "3 vertices; edges 1a",
            "3 vertices; edges 123",
            "3 vertices; lines 12",
            "0 vertices; edges 12",
            "3 vertices; edges 02,23",
        ] {
            assert!(parse_graph(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"vertices": 3, "edges": [[1,2],[2,3]], "lengths": [0.25, 0.25]}"#;
        let f = GraphFile::from_json(text).unwrap();
        assert_eq!(f.graph, Graph::path(3).unwrap());
        assert_eq!(f.lengths.as_ref().unwrap().values(), &[0.25, 0.25]);
        let again = GraphFile::from_json(&f.to_json()).unwrap();
        assert_eq!(again.graph, f.graph);
        assert_eq!(again.lengths, f.lengths);
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_sizes() {
        assert!(GraphFile::from_json(r#"{"vertices": 2, "edges": [[1,2]], "colour": 1}"#).is_err());
        assert!(GraphFile::from_json(r#"{"vertices": 2, "edges": [[1,2]], "lengths": [1, 2]}"#).is_err());
        assert!(GraphFile::from_json(r#"{"vertices": 2, "edges": [[1,2]], "lengths": [-1]}"#).is_err());
        assert!(GraphFile::from_json(r#"{"vertices": 2, "edges": [[1,2]], "vertex_weights": [1]}"#).is_err());
        assert!(GraphFile::from_json(r#"{"vertices": 2, "edges": [[0,1]]}"#).is_err());
        assert!(GraphFile::from_json(r#"{"vertices": 99999999999, "edges": [[1,2]]}"#).is_err());
    }
}
