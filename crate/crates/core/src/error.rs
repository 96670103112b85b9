use thiserror::Error;

/// Reasons a graph description is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphDefect {
    Loop { vertex: usize },
    DuplicateEdge { u: usize, v: usize },
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    Disconnected { unreachable: usize },
    NoEdges,
}

impl std::fmt::Display for GraphDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // vertices are reported 1-indexed, as they appear in input files
        match self {
            GraphDefect::Loop { vertex } => write!(f, "loop at vertex {}", vertex + 1),
            GraphDefect::DuplicateEdge { u, v } => {
                write!(f, "duplicate edge {}-{}", u + 1, v + 1)
            }
            GraphDefect::VertexOutOfRange {
                vertex,
                vertex_count,
            } => write!(
                f,
                "vertex {} out of range 1..={}",
                vertex + 1,
                vertex_count
            ),
            GraphDefect::Disconnected { unreachable } => {
                write!(f, "disconnected: vertex {} unreachable", unreachable + 1)
            }
            GraphDefect::NoEdges => write!(f, "graph has no edges"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(GraphDefect),
    #[error("length of edge {edge} is not positive ({value})")]
    NonPositiveLength { edge: usize, value: f64 },
    #[error("weight of vertex {vertex} is not positive ({value})")]
    NonPositiveVertexWeight { vertex: usize, value: f64 },
    #[error("negative edge weight {value} on edge {edge}")]
    NegativeEdgeWeight { edge: usize, value: f64 },
    #[error("support of the edge weight is disconnected")]
    DisconnectedSupport,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("zero eigenvalue is not simple (second eigenvalue {second:e})")]
    ZeroNotSimple { second: f64 },
    #[error("eigenvalue cluster boundary is ambiguous at multiplicity {multiplicity}")]
    DegenerateGap { multiplicity: usize },
    #[error("function is constant")]
    ConstantFunction,
    #[error("eigenspace basis is not m0-orthonormal (residual {residual:e})")]
    BasisMismatch { residual: f64 },
    #[error("direction does not preserve the normalization (sum {sum:e})")]
    NotConstraintPreserving { sum: f64 },
    #[error("finite-difference step leaves the positive cone at edge {edge}")]
    StepTooLarge { edge: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("invalid initial point: {0}")]
    InvalidInit(String),
    #[error("invalid vertex weight: {0}")]
    InvalidVertexWeight(String),
    #[error("grid has no interior points")]
    EmptyGrid,
    #[error("certificate mode mismatch: expected {expected}")]
    WrongMode { expected: &'static str },
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
