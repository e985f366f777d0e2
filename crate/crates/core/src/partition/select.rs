//! Representative key point and prevalence per subgraph.

use super::Partition;
use crate::graph::{ArgumentGraph, VertexSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SupportingEdge {
    pub u: String,
    pub v: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPointResult {
    pub index: usize,
    /// `None` for a subgraph without internal edges.
    pub key_point: Option<String>,
    pub edge: Option<SupportingEdge>,
    pub members: VertexSet,
    /// Share of the group's arguments in this subgraph.
    pub prevalence: f64,
}

/// Picks each subgraph's heaviest induced edge (ties: smallest key-point
/// text, then smallest `(u, v)`) and reports its key point.
pub fn select_key_points(g: &ArgumentGraph, p: &Partition) -> Vec<KeyPointResult> {
    let total = g.num_vertices();
    p.subgraphs
        .iter()
        .enumerate()
        .map(|(index, members)| {
            // induced edges arrive in (u, v) order, so a strict comparison
            // keeps the smallest endpoints among exact ties
            let best = g
                .induced_edges(members)
                .expect("partition members are graph vertices")
                .into_iter()
                .reduce(|best, e| {
                    let better = e.weight > best.weight || (e.weight == best.weight && e.key_point < best.key_point);
                    if better {
                        e
                    } else {
                        best
                    }
                });
            if best.is_none() {
                log::warn!(
                    "{}: subgraph {index} ({} members) has no internal edge, no key point",
                    g.group,
                    members.len()
                );
            }
            KeyPointResult {
                index,
                key_point: best.map(|e| e.key_point.clone()),
                edge: best.map(|e| SupportingEdge {
                    u: e.u.clone(),
                    v: e.v.clone(),
                    weight: e.weight,
                }),
                members: members.clone(),
                prevalence: if total == 0 {
                    0.0
                } else {
                    members.len() as f64 / total as f64
                },
            }
        })
        .collect()
}

/// `(key point, fraction of the group's arguments)` per result. Under soft
/// partitioning the fractions may sum to more than one.
pub fn prevalence_report(results: &[KeyPointResult], num_arguments: usize) -> Vec<(Option<String>, f64)> {
    results
        .iter()
        .map(|r| {
            let frac = if num_arguments == 0 {
                0.0
            } else {
                r.members.len() as f64 / num_arguments as f64
            };
            (r.key_point.clone(), frac)
        })
        .collect()
}
