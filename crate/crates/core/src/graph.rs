//! Weighted argument graph: arguments are vertices, every pair predicted to
//! share a key point is an edge carrying the sharing score as weight and the
//! generated key point as label.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{GroupKey, Stance, TopicStanceGroup};
use crate::pairing::PairPrediction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("argument \"{0}\" is not a vertex of this graph")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("self-loop on \"{0}\"")]
    SelfLoop(String),
    #[error("edge ({u}, {v}) has weight {weight} outside [0, 1]")]
    WeightOutOfRange { u: String, v: String, weight: f64 },
    #[error("edge ({0}, {1}) has an empty key point")]
    EmptyKeyPoint(String, String),
    #[error("prediction for group {found} given to graph of {expected}")]
    WrongGroup { expected: GroupKey, found: GroupKey },
    #[error("duplicate vertex \"{0}\"")]
    DuplicateVertex(String),
    #[error("graph file: {0}")]
    Io(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub weight: f64,
    pub key_point: String,
}

/// Subset of a graph's vertices, stored as vertex indices. Since vertices are
/// sorted by `arg_id`, index order is `arg_id` order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(pub BTreeSet<usize>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: usize) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: usize) -> bool {
        self.0.remove(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn with(&self, v: usize) -> VertexSet {
        let mut s = self.clone();
        s.insert(v);
        s
    }

    pub fn without(&self, v: usize) -> VertexSet {
        let mut s = self.clone();
        s.remove(v);
        s
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

/// Neighbor entry of the adjacency list: `(other endpoint, edge index)`.
type Incident = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentGraph {
    pub group: GroupKey,
    /// Sorted `arg_id`s; a vertex's index is its position here.
    vertices: Vec<String>,
    /// Sorted by `(u, v)`.
    edges: Vec<Edge>,
    endpoints: Vec<(usize, usize)>,
    adjacency: Vec<Vec<Incident>>,
    index: HashMap<String, usize>,
}

impl ArgumentGraph {
    /// Assembles a graph from vertices and edges, checking every invariant:
    /// no self-loops, one edge per unordered pair, weights in `[0, 1]`,
    /// non-empty key points, endpoints among the vertices.
    pub fn new(group: GroupKey, vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut vertices = vertices;
        vertices.sort();
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateVertex(w[0].clone()));
            }
        }
        let index: HashMap<String, usize> = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();

        let mut normalized = Vec::with_capacity(edges.len());
        for mut e in edges {
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(GraphError::WeightOutOfRange {
                    u: e.u,
                    v: e.v,
                    weight: e.weight,
                });
            }
            if e.key_point.trim().is_empty() {
                return Err(GraphError::EmptyKeyPoint(e.u, e.v));
            }
            for end in [&e.u, &e.v] {
                if !index.contains_key(end) {
                    return Err(GraphError::UnknownVertex(end.clone()));
                }
            }
            normalized.push(e);
        }
        normalized.sort_by(|a, b| (&a.u, &a.v).cmp(&(&b.u, &b.v)));
        for w in normalized.windows(2) {
            if w[0].u == w[1].u && w[0].v == w[1].v {
                return Err(GraphError::DuplicateEdge(w[0].u.clone(), w[0].v.clone()));
            }
        }

        let endpoints: Vec<_> = normalized.iter().map(|e| (index[&e.u], index[&e.v])).collect();
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (k, &(a, b)) in endpoints.iter().enumerate() {
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            group,
            vertices,
            edges: normalized,
            endpoints,
            adjacency,
            index,
        })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn index_of(&self, arg_id: &str) -> Option<usize> {
        self.index.get(arg_id).copied()
    }

    /// Neighbors of `v` as `(neighbor, edge)` in neighbor order.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.adjacency[v].iter().map(|&(n, k)| (n, &self.edges[k]))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn all_vertices(&self) -> VertexSet {
        (0..self.vertices.len()).collect()
    }

    /// Resolves `arg_id`s into a [`VertexSet`].
    pub fn vertex_set<S: AsRef<str>>(&self, ids: &[S]) -> Result<VertexSet> {
        ids.iter()
            .map(|id| {
                self.index_of(id.as_ref())
                    .ok_or_else(|| GraphError::UnknownVertex(id.as_ref().to_string()))
            })
            .collect()
    }

    pub fn member_ids(&self, s: &VertexSet) -> Vec<String> {
        s.iter().map(|v| self.vertices[v].clone()).collect()
    }

    fn check(&self, s: &VertexSet) -> Result<()> {
        match s.0.last() {
            Some(&v) if v >= self.vertices.len() => Err(GraphError::IndexOutOfRange(v)),
            _ => Ok(()),
        }
    }

    /// Edge indices induced by `s`, ascending (which is `(u, v)` order).
    fn induced_indices(&self, s: &VertexSet) -> Vec<usize> {
        let mut ks: Vec<usize> = s
            .iter()
            .flat_map(|v| {
                self.adjacency[v]
                    .iter()
                    .filter(move |&&(n, _)| n > v && s.contains(n))
                    .map(|&(_, k)| k)
            })
            .collect();
        ks.sort_unstable();
        ks
    }

    /// Edges with both endpoints in `s`, in `(u, v)` order.
    pub fn induced_edges(&self, s: &VertexSet) -> Result<Vec<&Edge>> {
        self.check(s)?;
        Ok(self.induced_indices(s).into_iter().map(|k| &self.edges[k]).collect())
    }

    /// Mean weight of the edges induced by `s`; `0` when `s` induces none.
    pub fn subgraph_weight(&self, s: &VertexSet) -> Result<f64> {
        self.check(s)?;
        Ok(self.weight_unchecked(s))
    }

    pub(crate) fn weight_unchecked(&self, s: &VertexSet) -> f64 {
        let ks = self.induced_indices(s);
        if ks.is_empty() {
            return 0.0;
        }
        let sum: f64 = ks.iter().map(|&k| self.edges[k].weight).sum();
        sum / ks.len() as f64
    }

    pub fn edge_endpoints(&self, k: usize) -> (usize, usize) {
        self.endpoints[k]
    }
}

// =============================================================================
// Construction from predictions
// =============================================================================

/// Builds the group's graph. Every argument becomes a vertex; a prediction
/// becomes an edge exactly when it carries a (non-empty) key point, with the
/// sharing score as weight. Predictions without a key point are "No" answers
/// and produce no edge.
pub fn build_graph(group: &TopicStanceGroup, predictions: &[PairPrediction]) -> Result<ArgumentGraph> {
    let key = group.key();
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for p in predictions {
        if p.pair.group != key {
            return Err(GraphError::WrongGroup {
                expected: key,
                found: p.pair.group.clone(),
            });
        }
        for id in [&p.pair.i, &p.pair.j] {
            if !group.contains_argument(id) {
                return Err(GraphError::UnknownVertex(id.clone()));
            }
        }
        let (u, v) = if p.pair.i <= p.pair.j {
            (&p.pair.i, &p.pair.j)
        } else {
            (&p.pair.j, &p.pair.i)
        };
        if !seen.insert((u.clone(), v.clone())) {
            return Err(GraphError::DuplicateEdge(u.clone(), v.clone()));
        }
        match p.key_point.as_deref().map(str::trim) {
            Some(kp) if !kp.is_empty() => edges.push(Edge {
                u: u.clone(),
                v: v.clone(),
                weight: p.share_score,
                key_point: kp.to_string(),
            }),
            _ => {}
        }
    }
    let vertices = group.arguments.iter().map(|a| a.arg_id.clone()).collect();
    ArgumentGraph::new(key, vertices, edges)
}

// =============================================================================
// graph.json
// =============================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub topic: String,
    pub stance: Stance,
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl From<&ArgumentGraph> for GraphFile {
    fn from(g: &ArgumentGraph) -> Self {
        GraphFile {
            topic: g.group.topic.clone(),
            stance: g.group.stance,
            vertices: g.vertices.clone(),
            edges: g.edges.clone(),
        }
    }
}

impl TryFrom<GraphFile> for ArgumentGraph {
    type Error = GraphError;

    fn try_from(f: GraphFile) -> Result<Self> {
        ArgumentGraph::new(GroupKey::new(f.topic, f.stance), f.vertices, f.edges)
    }
}

impl ArgumentGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphFile::from(self)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Io(e.to_string()))?;
        f.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
