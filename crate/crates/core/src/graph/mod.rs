//! Graphs, edge-length functions, Fujiwara weights and the weighted Laplacian.
//!
//! Vertices are stored 0-based internally. Every textual surface (graph
//! files, compact notation, error messages, reports) is 1-based.

mod parse;

pub use parse::{parse_graph, GraphFile, MAX_VERTICES};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, GraphDefect, Result};

/// Relative tolerance used when checking `2 * sum(l) == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// An undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    fn canonical(a: usize, b: usize) -> Self {
        Edge {
            u: a.min(b),
            v: a.max(b),
        }
    }
}

/// A finite, simple, connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph from 0-based vertex pairs. Edge order is preserved.
    pub fn new<I>(vertex_count: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (a, b) in pairs {
            for x in [a, b] {
                if x >= vertex_count {
                    return Err(Error::InvalidGraph(GraphDefect::VertexOutOfRange {
                        vertex: x,
                        vertex_count,
                    }));
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(GraphDefect::Loop { vertex: a }));
            }
            let e = Edge::canonical(a, b);
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(GraphDefect::DuplicateEdge { u: e.u, v: e.v }));
            }
            edges.push(e);
        }
        if edges.is_empty() {
            return Err(Error::InvalidGraph(GraphDefect::NoEdges));
        }
        let g = Graph {
            vertex_count,
            edges,
        };
        if let Some(unreachable) = g.first_unreachable(|_| true) {
            return Err(Error::InvalidGraph(GraphDefect::Disconnected { unreachable }));
        }
        Ok(g)
    }

    /// Builds a graph from 1-based vertex pairs, as written in the examples.
    pub fn from_one_based<I>(vertex_count: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut shifted = Vec::new();
        for (a, b) in pairs {
            if a == 0 || b == 0 {
                return Err(Error::Parse("vertex labels start at 1".into()));
            }
            shifted.push((a - 1, b - 1));
        }
        Graph::new(vertex_count, shifted)
    }

    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        Graph::new(leaves + 1, (1..=leaves).map(|i| (0, i)))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.u == vertex || e.v == vertex)
            .count()
    }

    /// Whether the subgraph made of edges for which `keep(edge_index)` holds
    /// spans and connects all vertices.
    pub fn is_connected_on(&self, keep: impl Fn(usize) -> bool) -> bool {
        self.first_unreachable(keep).is_none()
    }

    fn first_unreachable(&self, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let n = self.vertex_count;
        let mut adj = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            if keep(i) {
                adj[e.u].push(e.v);
                adj[e.v].push(e.u);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

/// Positive length per edge, aligned with `Graph::edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthFunction {
    values: Vec<f64>,
    normalized: bool,
}

impl LengthFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_positive_lengths(&values)?;
        let normalized = is_normalized(&values);
        Ok(LengthFunction { values, normalized })
    }

    /// The normalized length function with all edges equal.
    pub fn uniform(edge_count: usize) -> Self {
        let v = 1.0 / (2.0 * edge_count as f64);
        LengthFunction {
            values: vec![v; edge_count],
            normalized: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when `2 * sum(l) == 1` within [`NORMALIZATION_TOL`].
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        LengthFunction::new(self.values.iter().map(|x| c * x).collect())
    }

    pub(crate) fn check_for(&self, g: &Graph) -> Result<()> {
        if self.values.len() != g.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: g.edge_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

fn check_positive_lengths(values: &[f64]) -> Result<()> {
    match values.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        Some(edge) => Err(Error::NonPositiveLength {
            edge,
            value: values[edge],
        }),
        None => Ok(()),
    }
}

fn is_normalized(values: &[f64]) -> bool {
    (2.0 * values.iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOL
}

/// Rescales `l` so that `2 * sum(l) == 1`.
pub fn normalize_lengths(l: &LengthFunction) -> Result<LengthFunction> {
    check_positive_lengths(&l.values)?;
    if l.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if l.normalized {
        return Ok(l.clone());
    }
    let s = 2.0 * l.total();
    let values: Vec<f64> = l.values.iter().map(|x| x / s).collect();
    Ok(LengthFunction {
        values,
        normalized: true,
    })
}

/// Positive mass per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexWeight(Vec<f64>);

impl VertexWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(vertex) = values.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::NonPositiveVertexWeight {
                vertex,
                value: values[vertex],
            });
        }
        Ok(VertexWeight(values))
    }

    pub fn uniform(vertex_count: usize) -> Self {
        VertexWeight(vec![1.0 / vertex_count as f64; vertex_count])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Nonnegative conductance per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeight(Vec<f64>);

impl EdgeWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(edge) = values.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::NegativeEdgeWeight {
                edge,
                value: values[edge],
            });
        }
        Ok(EdgeWeight(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Vertex and edge weights induced by a length function:
/// `m0(u) = sum of l over edges at u`, `m1(e) = 1 / l(e)`.
pub fn fujiwara_weights(g: &Graph, l: &LengthFunction) -> Result<(VertexWeight, EdgeWeight)> {
    l.check_for(g)?;
    check_positive_lengths(&l.values)?;
    let mut m0 = vec![0.0; g.vertex_count()];
    for (e, &len) in g.edges().iter().zip(&l.values) {
        m0[e.u] += len;
        m0[e.v] += len;
    }
    let m1 = l.values.iter().map(|x| 1.0 / x).collect();
    Ok((VertexWeight(m0), EdgeWeight(m1)))
}

/// The Laplacian of `(m0, m1)` written in the `m0`-orthonormal basis
/// `e_i = delta_i / sqrt(m0(i))`, where it is a symmetric matrix.
#[derive(Debug, Clone)]
pub struct WeightedLaplacian {
    graph: Graph,
    m0: VertexWeight,
    m1: EdgeWeight,
    matrix: DMatrix<f64>,
}

impl WeightedLaplacian {
    /// Assembles the Laplacian induced by the Fujiwara weights of `l`.
    pub fn from_lengths(g: &Graph, l: &LengthFunction) -> Result<Self> {
        let (m0, m1) = fujiwara_weights(g, l)?;
        assemble_laplacian(g, &m0, &m1)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn m0(&self) -> &VertexWeight {
        &self.m0
    }

    pub fn m1(&self) -> &EdgeWeight {
        &self.m1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `(Delta phi)(u) = sum_{v~u} m1(uv)/m0(u) (phi(u) - phi(v))`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let m0 = self.m0.values();
        let mut out = vec![0.0; self.graph.vertex_count()];
        for (e, &w) in self.graph.edges().iter().zip(self.m1.values()) {
            let d = phi[e.u] - phi[e.v];
            out[e.u] += w * d / m0[e.u];
            out[e.v] -= w * d / m0[e.v];
        }
        out
    }

    /// `(sqrt(m0(1)), ..., sqrt(m0(n)))`, the kernel direction of the matrix.
    pub fn sqrt_mass(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.m0.values().len(),
            self.m0.values().iter().map(|x| x.sqrt()),
        )
    }
}

pub fn assemble_laplacian(
    g: &Graph,
    m0: &VertexWeight,
    m1: &EdgeWeight,
) -> Result<WeightedLaplacian> {
    let n = g.vertex_count();
    if m0.values().len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m0.values().len(),
        });
    }
    if m1.values().len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: m1.values().len(),
        });
    }
    if let Some(vertex) = m0.values().iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveVertexWeight {
            vertex,
            value: m0.values()[vertex],
        });
    }
    let w = m1.values();
    if !g.is_connected_on(|i| w[i] > 0.0) {
        return Err(Error::DisconnectedSupport);
    }
    let mass = m0.values();
    let mut matrix = DMatrix::zeros(n, n);
    for (e, &we) in g.edges().iter().zip(w) {
        matrix[(e.u, e.u)] += we / mass[e.u];
        matrix[(e.v, e.v)] += we / mass[e.v];
        let off = -we / (mass[e.u].sqrt() * mass[e.v].sqrt());
        matrix[(e.u, e.v)] = off;
        matrix[(e.v, e.u)] = off;
    }
    Ok(WeightedLaplacian {
        graph: g.clone(),
        m0: m0.clone(),
        m1: m1.clone(),
        matrix,
    })
}
