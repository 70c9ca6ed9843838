//! Rotation systems, current-graph logs, derivation of embeddings, handle
//! surgery and completion search for genus embeddings of small complete
//! graphs.

pub mod casebook;
pub mod current_graph;
pub mod derivation;
pub mod error;
pub mod faces;
pub mod report;
pub mod rotation;
pub mod search;
pub mod surgery;
pub mod verify;
pub mod vertex;

pub use error::{EmbeddingError, ParseError};
pub use faces::{genus_target, stats_of, trace_faces, triangular_genus, FaceSet, SurfaceStats};
pub use report::{Check, VerificationReport};
pub use rotation::RotationSystem;
pub use vertex::{Vertex, VertexPair};
