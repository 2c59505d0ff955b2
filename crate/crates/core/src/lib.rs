//! Mapping communicating processes onto the PEs of a hierarchical machine.
//!
//! The communication pattern is a sparse weighted graph and the machine is
//! a homogeneous hierarchy (cores per processor, processors per node, ...)
//! with one distance per level. A mapping is scored by the quadratic
//! assignment objective `sum over PE pairs (i, j) of C[pi(i)][pi(j)] * D[i][j]`.
//! Initial mappings come from recursive balanced partitioning along the
//! hierarchy; pair-exchange local search then improves them.

pub mod construction;
pub mod error;
pub mod graph;
pub mod io;
pub mod local_search;
pub mod mapping;
pub mod partition;
pub mod tools;
pub mod topology;

pub use construction::{construct, Construction};
pub use error::{Error, Result};
pub use graph::Graph;
pub use local_search::{local_search, NeighborhoodKind, NeighborhoodSpec, SearchStats};
pub use mapping::{swap_gain, total_cost, total_cost_dense, Mapping};
pub use partition::{partition, quotient_graph, Partition, Quality};
pub use topology::{DistanceOracle, HierarchyTopology};
