//! Lloyd's k-means over argument embeddings, used as the initial partition.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Partition, PartitionError, Result};
use crate::embed::EmbeddingTable;
use crate::graph::VertexSet;
use crate::seed;

/// How the initial centroids are picked. Both choose distinct points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KmeansInit {
    /// First centroid drawn uniformly; each further centroid is the point
    /// farthest from all centroids chosen so far (ties: lowest index).
    #[default]
    FarthestFirst,
    /// All centroids drawn uniformly without replacement.
    Uniform,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn initial_centroids<R: Rng>(points: &[&[f64]], k: usize, init: KmeansInit, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    match init {
        KmeansInit::Uniform => index::sample(rng, n, k).into_vec(),
        KmeansInit::FarthestFirst => {
            let mut chosen = vec![rng.random_range(0..n)];
            let mut taken = vec![false; n];
            taken[chosen[0]] = true;
            let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, points[chosen[0]])).collect();
            while chosen.len() < k {
                let mut best: Option<usize> = None;
                for i in (0..n).filter(|&i| !taken[i]) {
                    if best.is_none_or(|b| nearest[i] > nearest[b]) {
                        best = Some(i);
                    }
                }
                let c = best.expect("k <= n leaves an untaken point");
                taken[c] = true;
                chosen.push(c);
                for (i, d) in nearest.iter_mut().enumerate() {
                    *d = d.min(sq_dist(points[i], points[c]));
                }
            }
            chosen
        }
    }
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Clusters `points` into `k` groups, returning each point's cluster.
///
/// Points go to the nearest centroid (ties: lowest centroid index). A cluster
/// left empty takes over the point farthest from its own centroid among
/// clusters with more than one member. Stops once assignments no longer
/// change or after `max_iters` rounds.
pub fn kmeans<R: Rng>(points: &[&[f64]], k: usize, max_iters: usize, init: KmeansInit, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n (k={k}, n={n})");
    let dim = points[0].len();
    let mut centroids: Vec<Vec<f64>> = initial_centroids(points, k, init, rng)
        .into_iter()
        .map(|i| points[i].to_vec())
        .collect();

    let mut assign: Vec<usize> = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut dist = vec![0.0; n];
        let mut next = vec![0; n];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest_centroid(p, &centroids);
            next[i] = c;
            dist[i] = d;
            counts[c] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut far: Option<usize> = None;
            for i in (0..n).filter(|&i| counts[next[i]] > 1) {
                if far.is_none_or(|f| dist[i] > dist[f]) {
                    far = Some(i);
                }
            }
            let i = far.expect("an empty cluster implies one with several members");
            counts[next[i]] -= 1;
            next[i] = empty;
            counts[empty] = 1;
        }
        if next == assign {
            break;
        }
        assign = next;

        for c in centroids.iter_mut() {
            c.iter_mut().for_each(|x| *x = 0.0);
        }
        for (i, p) in points.iter().enumerate() {
            let c = &mut centroids[assign[i]];
            for (x, y) in c.iter_mut().zip(p.iter()) {
                *x += y;
            }
        }
        for (c, &cnt) in centroids.iter_mut().zip(&counts) {
            c.iter_mut().for_each(|x| *x /= cnt as f64);
        }
        debug_assert!(centroids.iter().all(|c| c.len() == dim));
    }
    assign
}

/// Hard initial partition of `vertices` (a graph's sorted vertex list) into
/// `s` clusters. Subgraph `c` holds the vertices assigned to centroid `c`.
pub fn kmeans_init(
    emb: &EmbeddingTable,
    vertices: &[String],
    s: usize,
    seed: u64,
    max_iters: usize,
    init: KmeansInit,
) -> Result<Partition> {
    if s == 0 {
        return Err(PartitionError::InvalidConfig("num_subgraphs must be at least 1".into()));
    }
    if s > vertices.len() {
        return Err(PartitionError::TooManySubgraphs {
            requested: s,
            vertices: vertices.len(),
        });
    }
    let points = emb.rows(vertices)?;
    let mut rng = seed::rng(seed);
    let assign = kmeans(&points, s, max_iters, init, &mut rng);
    let mut subgraphs = vec![VertexSet::new(); s];
    for (v, &c) in assign.iter().enumerate() {
        subgraphs[c].insert(v);
    }
    Ok(Partition::new(subgraphs))
}
