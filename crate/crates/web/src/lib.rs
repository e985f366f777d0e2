//! Browser bindings. Each export takes plain numbers or strings and returns
//! a JSON string; the page in `www/` draws the results.
//!
//! The pure functions (`*_json`) are callable natively as well, which is how
//! the tests exercise them.

use kpa_core::embed::EmbeddingTable;
use kpa_core::graph::{ArgumentGraph, Edge};
use kpa_core::metrics::{rouge_n, soft_prf, ExactMatch, Similarity, TokenF1, CONCAT_JOINER};
use kpa_core::pairing::{share_score, LogitPair};
use kpa_core::partition::{kmeans_init, local_search, select_key_points, KmeansInit, PartitionConfig};
use kpa_core::{seed, GroupKey, Stance};
use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo output serializes")
}

// =============================================================================
// Sharing score
// =============================================================================

#[derive(Serialize)]
struct CurvePoint {
    margin: f64,
    score: f64,
}

/// `share_score(margin, 0)` sampled at `steps + 1` margins in `[lo, hi]`.
pub fn score_curve_json(lo: f64, hi: f64, steps: usize) -> Result<String, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps == 0 || steps > 10_000 {
        return Err("need finite lo < hi and 1..=10000 steps".into());
    }
    let points = (0..=steps)
        .map(|k| {
            let margin = lo + (hi - lo) * k as f64 / steps as f64;
            share_score(LogitPair {
                logit_yes: margin,
                logit_no: 0.0,
            })
            .map(|score| CurvePoint { margin, score })
            .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(to_json(&points))
}

#[wasm_bindgen]
pub fn score(logit_yes: f64, logit_no: f64) -> Result<f64, JsValue> {
    share_score(LogitPair { logit_yes, logit_no }).map_err(js_err)
}

#[wasm_bindgen]
pub fn score_curve(lo: f64, hi: f64, steps: usize) -> Result<String, JsValue> {
    score_curve_json(lo, hi, steps).map_err(|e| JsValue::from_str(&e))
}

// =============================================================================
// Partitioning a planted-cluster graph
// =============================================================================

#[derive(Debug, Clone, Copy)]
pub struct DemoParams {
    pub clusters: usize,
    pub per_cluster: usize,
    /// Chance that a vertex is drawn near a foreign cluster, and scale of
    /// the cross-cluster edge density.
    pub noise: f64,
    pub threshold: f64,
    pub max_steps: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct DemoVertex {
    id: String,
    x: f64,
    y: f64,
    cluster: usize,
}

#[derive(Serialize)]
struct DemoMove {
    step: usize,
    vertex: usize,
    from: usize,
    to: usize,
    cost: f64,
    soft: bool,
}

#[derive(Serialize)]
struct DemoOutput {
    vertices: Vec<DemoVertex>,
    edges: Vec<(usize, usize, f64)>,
    initial: Vec<Vec<usize>>,
    refined: Vec<Vec<usize>>,
    moves: Vec<DemoMove>,
    key_points: Vec<Option<String>>,
    initial_weight: f64,
    refined_weight: f64,
}

fn sets(p: &kpa_core::Partition) -> Vec<Vec<usize>> {
    p.subgraphs.iter().map(|s| s.iter().collect()).collect()
}

/// Plants `clusters` groups of vertices on a circle, connects them densely
/// within and sparsely across groups, then runs k-means and local search.
pub fn partition_demo_json(p: DemoParams) -> Result<String, String> {
    if !(2..=8).contains(&p.clusters) || !(2..=20).contains(&p.per_cluster) {
        return Err("clusters must be 2..=8 and per_cluster 2..=20".into());
    }
    if !(0.0..=1.0).contains(&p.noise) || !(p.threshold.is_finite() && p.threshold >= 0.0) || p.max_steps > 100_000 {
        return Err("noise in [0, 1], threshold >= 0, max_steps <= 100000".into());
    }
    let mut rng = seed::rng(seed::stream_seed(p.seed, "demo-graph", ""));
    let n = p.clusters * p.per_cluster;
    let center = |c: usize| {
        let a = std::f64::consts::TAU * c as f64 / p.clusters as f64;
        (a.cos(), a.sin())
    };
    let mut vertices = Vec::with_capacity(n);
    let mut table = EmbeddingTable::new();
    for v in 0..n {
        let cluster = v / p.per_cluster;
        let drawn_near = if rng.random_bool(p.noise * 0.5) {
            rng.random_range(0..p.clusters)
        } else {
            cluster
        };
        let (cx, cy) = center(drawn_near);
        let (x, y) = (cx + rng.random_range(-0.35..0.35), cy + rng.random_range(-0.35..0.35));
        let id = format!("v{v:03}");
        table.insert(id.clone(), vec![x, y]).map_err(|e| e.to_string())?;
        vertices.push(DemoVertex { id, x, y, cluster });
    }
    let mut edges = Vec::new();
    let mut raw = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (cu, cv) = (vertices[u].cluster, vertices[v].cluster);
            let (prob, lo, hi) = if cu == cv {
                (0.7, 0.6, 1.0)
            } else {
                (p.noise * 0.15, 0.05, 0.6)
            };
            if rng.random_bool(prob) {
                let w: f64 = rng.random_range(lo..hi);
                edges.push(Edge {
                    u: vertices[u].id.clone(),
                    v: vertices[v].id.clone(),
                    weight: w,
                    key_point: format!("Key point {}", cu.min(cv) + 1),
                });
                raw.push((u, v, w));
            }
        }
    }
    let ids: Vec<String> = vertices.iter().map(|v| v.id.clone()).collect();
    let g = ArgumentGraph::new(GroupKey::new("demo", Stance::Pro), ids, edges).map_err(|e| e.to_string())?;
    let init = kmeans_init(&table, g.vertices(), p.clusters, p.seed, 100, KmeansInit::FarthestFirst)
        .map_err(|e| e.to_string())?;
    let cfg = PartitionConfig {
        num_subgraphs: p.clusters,
        threshold: p.threshold,
        max_steps: p.max_steps,
        seed: p.seed,
        ..PartitionConfig::default()
    };
    let refined = local_search(&g, &init, &cfg).map_err(|e| e.to_string())?;
    let out = DemoOutput {
        initial_weight: init.total_weight(&g),
        refined_weight: refined.total_weight(&g),
        key_points: select_key_points(&g, &refined)
            .into_iter()
            .map(|r| r.key_point)
            .collect(),
        initial: sets(&init),
        refined: sets(&refined),
        moves: refined
            .moves
            .iter()
            .map(|m| DemoMove {
                step: m.step,
                vertex: m.vertex,
                from: m.from,
                to: m.to,
                cost: m.cost,
                soft: m.soft,
            })
            .collect(),
        vertices,
        edges: raw,
    };
    Ok(to_json(&out))
}

#[wasm_bindgen]
pub fn partition_demo(
    clusters: usize,
    per_cluster: usize,
    noise: f64,
    threshold: f64,
    max_steps: usize,
    seed: u32,
) -> Result<String, JsValue> {
    partition_demo_json(DemoParams {
        clusters,
        per_cluster,
        noise,
        threshold,
        max_steps,
        seed: u64::from(seed),
    })
    .map_err(|e| JsValue::from_str(&e))
}

// =============================================================================
// Evaluating key point sets
// =============================================================================

#[derive(Serialize)]
struct TextScores {
    rouge1: f64,
    rouge2: f64,
    #[serde(rename = "sP")]
    sp: f64,
    #[serde(rename = "sR")]
    sr: f64,
    #[serde(rename = "sF1")]
    sf1: f64,
    /// `[reference][generated]` similarities.
    matrix: Vec<Vec<f64>>,
}

fn lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// Scores newline-separated generated key points against references.
pub fn evaluate_json(generated: &str, reference: &str, sim: &str) -> Result<String, String> {
    let sim: &dyn Similarity = match sim {
        "token-f1" => &TokenF1,
        "exact" => &ExactMatch,
        other => return Err(format!("unknown similarity \"{other}\"")),
    };
    let (gen, refs) = (lines(generated), lines(reference));
    let soft = soft_prf(&gen, &refs, sim).map_err(|e| e.to_string())?;
    let (cand, ref_text) = (gen.join(CONCAT_JOINER), refs.join(CONCAT_JOINER));
    let matrix = refs
        .iter()
        .map(|r| gen.iter().map(|g| sim.score(r, g).map_err(|e| e.to_string())).collect())
        .collect::<Result<_, _>>()?;
    Ok(to_json(&TextScores {
        rouge1: rouge_n(&cand, &ref_text, 1).f1,
        rouge2: rouge_n(&cand, &ref_text, 2).f1,
        sp: soft.sp,
        sr: soft.sr,
        sf1: soft.sf1,
        matrix,
    }))
}

#[wasm_bindgen]
pub fn evaluate(generated: &str, reference: &str, sim: &str) -> Result<String, JsValue> {
    evaluate_json(generated, reference, sim).map_err(|e| JsValue::from_str(&e))
}
