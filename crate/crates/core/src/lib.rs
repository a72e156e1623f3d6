//! Random-walk profiles on finite graphs and the small-boundary sets they
//! certify.
//!
//! The crate computes the lazy-walk total variation profile `TV_n`, the
//! displacement and entropy profiles `D*_n` and `H*_n`, the massive Green
//! metric, exact Ollivier-Ricci curvature, and a simultaneous coupling of
//! conditioned walk endpoints whose cells have small boundary-to-volume
//! ratio. Each inequality relating these objects has an audit that checks it
//! exactly (or by Monte Carlo where exact evaluation is out of reach).

pub mod coupling;
pub mod curvature;
pub mod experiments;
pub mod graph;
pub mod green;
pub mod report;
pub mod stats;
pub mod tail;
pub mod transport;
pub mod walk;

pub use graph::{Graph, GraphError, Vertex, VertexSet};
pub use report::{AuditRecord, AuditReport};
pub use walk::{DistributionRow, PairScope, ProfileRow, ProfileTable};
