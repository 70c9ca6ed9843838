use thiserror::Error;

use crate::vertex::Vertex;

/// Structural problems with a rotation system or its surface counts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("asymmetric adjacency: {0} lists {1} but {1} does not list {0}")]
    Asymmetric(Vertex, Vertex),
    #[error("vertex {neighbor} appears more than once in the rotation at {at}")]
    RepeatedNeighbor { at: Vertex, neighbor: Vertex },
    #[error("vertex {0} lists itself as a neighbor")]
    Loop(Vertex),
    #[error("vertex {0} has degree {1}; every vertex needs degree at least 2")]
    LowDegree(Vertex, usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("vertex {0} is declared twice")]
    DuplicateVertex(Vertex),
    #[error("no edge between {0} and {1}")]
    MissingEdge(Vertex, Vertex),
    #[error("Euler characteristic {0} is odd; the trace is inconsistent")]
    OddEulerCharacteristic(i64),
    #[error("|E| - 3|V| + 6 = {0} is not a nonnegative multiple of 6")]
    NotTriangular(i64),
    #[error("genus target needs n >= 3, got {0}")]
    Domain(i64),
}

/// A text-format error pinned to a 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}
