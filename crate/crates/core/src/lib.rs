//! Uniform spanning trees of dense graphs: exact counting, samplers, leaf
//! reconfiguration, tree canonical forms and anticoncentration experiments.

pub mod anticonc;
pub mod count;
pub mod generate;
pub mod graph;
pub mod reconfig;
pub mod rng;
pub mod sampler;
mod serde_util;
pub mod stats;
pub mod tree;
pub mod tree_iso;

pub use count::{count_spanning_trees, degree_product, enumerate_spanning_trees, BigCount, CountError};
pub use generate::{GenerateError, GraphSpec};
pub use graph::{edge, Edge, Graph, GraphError};
pub use rng::{Purpose, StreamRng, Streams};
pub use sampler::{SampleError, SamplerKind};
pub use tree::{SpanningTree, TreeError};
