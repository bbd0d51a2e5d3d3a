use thiserror::Error;

/// Errors raised by graph construction, solving and the measure pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("edge {edge}: length must be positive and finite, got {value}")]
    NonPositiveLength { edge: usize, value: f64 },
    #[error("edge {edge}: weight must be positive and finite, got {value}")]
    NonPositiveWeight { edge: usize, value: f64 },
    #[error("edge {edge}: potential kappa^2 must be nonnegative and finite, got {value}")]
    NegativePotential { edge: usize, value: f64 },
    #[error("vertex {vertex} is not connected to vertex 0")]
    Disconnected { vertex: usize },
    #[error("vertex id {vertex} out of range (vertex count {count})")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("edge id {edge} out of range (edge count {count})")]
    EdgeOutOfRange { edge: usize, count: usize },
    #[error("offset {offset} outside edge {edge} of length {length}")]
    InvalidOffset { edge: usize, offset: f64, length: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("graph has no boundary vertices")]
    NoBoundary,
    #[error("expected {expected} boundary values, got {got}")]
    BoundaryLength { expected: usize, got: usize },
    #[error("interior component containing vertex {vertex} has no boundary contact")]
    SingularInterior { vertex: usize },
    #[error("alpha out of range: {0} (need 0 < alpha < 1)")]
    AlphaOutOfRange(f64),
    #[error("invalid tree spec: {0}")]
    InvalidSpec(String),
    #[error("depth {depth} makes the smallest edge length {min_length:e} underflow")]
    DepthUnderflow { depth: usize, min_length: f64 },
    #[error("invalid sigma-address symbol {0:?} (expected 'a' or 'b')")]
    InvalidSymbol(char),
    #[error("prefix of length {len} is longer than the leaf address length {max} at this depth")]
    PrefixTooLong { len: usize, max: usize },
    #[error("clopen sets in a simple function overlap")]
    Overlap,
    #[error("invalid depth range {lo}..={hi}")]
    DepthRange { lo: usize, hi: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("random walk: {0}")]
    Walk(String),
}

pub type Result<T> = std::result::Result<T, Error>;
