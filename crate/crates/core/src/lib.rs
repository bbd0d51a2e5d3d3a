//! Elliptic boundary-value problems `u″ = q u` on metric graphs with
//! Kirchhoff vertex conditions, finite-graph Dirichlet-to-Neumann matrices,
//! and exhaustion estimates of Dirichlet-to-Neumann boundary measures on
//! α–β trees.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod address;
pub mod dense;
pub mod dn;
pub mod edge;
pub mod error;
pub mod graph;
pub mod io;
pub mod measure;
pub mod scalar;
pub mod sparse;
pub mod tree;
pub mod walk;

pub use address::{Branch, SigmaAddress};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::MetricGraph<f64>;
pub type GraphEdge = graph::Edge<f64>;
pub type Point = graph::GraphPoint<f64>;
pub type Block = edge::EdgeDnBlock<f64>;
pub type DnMatrix = dn::DnMatrix<f64>;
pub type Harmonic<'g> = dn::QHarmonicFunction<'g, f64>;
pub type Family = tree::AlphaBetaSpec<f64>;
pub type Tree = tree::AbTree<f64>;
pub type BoundaryFunction = measure::SimpleBoundaryFunction<f64>;
pub use measure::ClopenSet;
