//! Key point analysis engine.
//!
//! Arguments are paired, each pair is scored for whether the two arguments
//! share a key point, the scored pairs become a weighted argument graph, and
//! the graph is split by local search into possibly-overlapping subgraphs.
//! Each subgraph contributes its heaviest edge's key point together with a
//! prevalence figure. [`metrics`] compares the result against reference key
//! points.

pub mod corpus;
pub mod embed;
pub mod graph;
pub mod metrics;
pub mod pairing;
pub mod partition;
pub mod scorer;
pub mod seed;

pub use corpus::{Dataset, GroupKey, Stance, TopicStanceGroup};
pub use graph::{ArgumentGraph, Edge, VertexSet};
pub use pairing::{ArgumentPair, PairPrediction};
pub use partition::{Partition, PartitionConfig};
