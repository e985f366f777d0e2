//! Soft partitioning of an argument graph.
//!
//! The partition starts from k-means over argument embeddings and is refined
//! by local search: a randomly drawn vertex occurrence is moved to whichever
//! other subgraph maximizes the change in summed subgraph weight, provided
//! that change is positive. A vertex whose removal would lower its source
//! subgraph's weight by more than the threshold `h` stays there as well, so
//! subgraphs may overlap. Each final subgraph is summarized by the key point
//! on its heaviest edge.

mod kmeans;
mod search;
mod select;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Stance;
use crate::embed::EmbedError;
use crate::graph::{ArgumentGraph, GraphError, VertexSet};

pub use kmeans::{kmeans, kmeans_init, KmeansInit};
pub use search::{apply_move, best_target, local_search, move_cost, MIN_GAIN};
pub use select::{prevalence_report, select_key_points, KeyPointResult, SupportingEdge};

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("invalid partition config: {0}")]
    InvalidConfig(String),
    #[error("{requested} subgraphs requested but the graph has {vertices} vertices")]
    TooManySubgraphs { requested: usize, vertices: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("subgraph index {0} out of range")]
    BadSubgraph(usize),
    #[error("vertex {vertex} is not in subgraph {subgraph}")]
    NotAMember { vertex: usize, subgraph: usize },
    #[error("vertex {vertex} is already in subgraph {subgraph}")]
    AlreadyMember { vertex: usize, subgraph: usize },
    #[error("source and target subgraph are both {0}")]
    SameSubgraph(usize),
    #[error("vertex {0} already belongs to every subgraph")]
    NoEligibleTarget(usize),
    #[error("partition does not cover vertex {0}")]
    Uncovered(String),
    #[error("subgraph {0} is empty")]
    EmptySubgraph(usize),
    #[error("partition file: {0}")]
    Io(String),
}

pub type Result<T, E = PartitionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    /// Number of subgraphs (and therefore key points) to produce.
    pub num_subgraphs: usize,
    /// Soft-retention threshold `h`.
    pub threshold: f64,
    /// Local-search step budget `l`; one step is one relocation attempt.
    pub max_steps: usize,
    pub seed: u64,
    pub kmeans_max_iters: usize,
    pub kmeans_init: KmeansInit,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            num_subgraphs: 1,
            threshold: 0.008,
            max_steps: 200,
            seed: 42,
            kmeans_max_iters: 100,
            kmeans_init: KmeansInit::default(),
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self, num_vertices: usize) -> Result<()> {
        if self.num_subgraphs == 0 {
            return Err(PartitionError::InvalidConfig("num_subgraphs must be at least 1".into()));
        }
        if self.num_subgraphs > num_vertices {
            return Err(PartitionError::TooManySubgraphs {
                requested: self.num_subgraphs,
                vertices: num_vertices,
            });
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(PartitionError::InvalidConfig(format!(
                "threshold must be finite and non-negative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// One applied relocation. `soft` means the vertex was also kept in `from`.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub step: usize,
    pub vertex: usize,
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    pub soft: bool,
}

/// Possibly-overlapping vertex sets plus the log of moves that produced them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    pub subgraphs: Vec<VertexSet>,
    pub moves: Vec<Move>,
}

impl Partition {
    pub fn new(subgraphs: Vec<VertexSet>) -> Self {
        Self {
            subgraphs,
            moves: Vec::new(),
        }
    }

    /// Checks that the subgraphs are non-empty and jointly cover `g`.
    pub fn check_covers(&self, g: &ArgumentGraph) -> Result<()> {
        let mut seen = vec![false; g.num_vertices()];
        for (idx, s) in self.subgraphs.iter().enumerate() {
            if s.is_empty() {
                return Err(PartitionError::EmptySubgraph(idx));
            }
            for v in s.iter() {
                *seen
                    .get_mut(v)
                    .ok_or(PartitionError::Graph(GraphError::IndexOutOfRange(v)))? = true;
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(PartitionError::Uncovered(g.vertex_id(v).to_string())),
            None => Ok(()),
        }
    }

    /// Sum of subgraph weights.
    pub fn total_weight(&self, g: &ArgumentGraph) -> f64 {
        self.subgraphs.iter().map(|s| g.weight_unchecked(s)).sum()
    }
}

// =============================================================================
// partition.json
// =============================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRef {
    pub u: String,
    pub v: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphRecord {
    pub members: Vec<String>,
    pub key_point: Option<String>,
    pub edge: Option<EdgeRef>,
    pub prevalence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub step: usize,
    pub vertex: String,
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    pub soft: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub topic: String,
    pub stance: Stance,
    pub subgraphs: Vec<SubgraphRecord>,
    pub moves: Vec<MoveRecord>,
}

impl PartitionFile {
    pub fn new(g: &ArgumentGraph, p: &Partition, results: &[KeyPointResult]) -> Self {
        PartitionFile {
            topic: g.group.topic.clone(),
            stance: g.group.stance,
            subgraphs: results
                .iter()
                .map(|r| SubgraphRecord {
                    members: g.member_ids(&r.members),
                    key_point: r.key_point.clone(),
                    edge: r.edge.as_ref().map(|e| EdgeRef {
                        u: e.u.clone(),
                        v: e.v.clone(),
                        weight: e.weight,
                    }),
                    prevalence: r.prevalence,
                })
                .collect(),
            moves: p
                .moves
                .iter()
                .map(|m| MoveRecord {
                    step: m.step,
                    vertex: g.vertex_id(m.vertex).to_string(),
                    from: m.from,
                    to: m.to,
                    cost: m.cost,
                    soft: m.soft,
                })
                .collect(),
        }
    }

    /// Generated key points in subgraph order, skipping edgeless subgraphs.
    pub fn key_points(&self) -> Vec<String> {
        self.subgraphs.iter().filter_map(|s| s.key_point.clone()).collect()
    }

    /// Rebuilds the partition (subgraphs and move log) against `g`.
    pub fn to_partition(&self, g: &ArgumentGraph) -> Result<Partition> {
        let subgraphs = self
            .subgraphs
            .iter()
            .map(|s| g.vertex_set(&s.members))
            .collect::<Result<Vec<_>, _>>()?;
        let moves = self
            .moves
            .iter()
            .map(|m| {
                Ok(Move {
                    step: m.step,
                    vertex: g
                        .index_of(&m.vertex)
                        .ok_or_else(|| GraphError::UnknownVertex(m.vertex.clone()))?,
                    from: m.from,
                    to: m.to,
                    cost: m.cost,
                    soft: m.soft,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(Partition { subgraphs, moves })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| PartitionError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PartitionError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PartitionError::Io(format!("{}: {e}", path.display())))
    }
}
