//! Local-search refinement with soft retention.

use rand::Rng;

use super::{Move, Partition, PartitionConfig, PartitionError, Result};
use crate::graph::ArgumentGraph;
use crate::seed;

/// Smallest cost treated as an improvement. Anything at or below it is
/// rounding noise around zero.
pub const MIN_GAIN: f64 = 1e-12;

fn check_subgraph(p: &Partition, idx: usize) -> Result<()> {
    if idx < p.subgraphs.len() {
        Ok(())
    } else {
        Err(PartitionError::BadSubgraph(idx))
    }
}

fn source_delta(g: &ArgumentGraph, p: &Partition, v: usize, out_idx: usize) -> f64 {
    let out = &p.subgraphs[out_idx];
    g.weight_unchecked(&out.without(v)) - g.weight_unchecked(out)
}

fn target_delta(g: &ArgumentGraph, p: &Partition, v: usize, in_idx: usize) -> f64 {
    let target = &p.subgraphs[in_idx];
    g.weight_unchecked(&target.with(v)) - g.weight_unchecked(target)
}

/// Change in summed subgraph weight from moving `v` out of subgraph `out_idx`
/// into subgraph `in_idx`:
/// `(wt(out \ {v}) - wt(out)) + (wt(in ∪ {v}) - wt(in))`.
pub fn move_cost(g: &ArgumentGraph, p: &Partition, v: usize, out_idx: usize, in_idx: usize) -> Result<f64> {
    check_subgraph(p, out_idx)?;
    check_subgraph(p, in_idx)?;
    if v >= g.num_vertices() {
        return Err(crate::graph::GraphError::IndexOutOfRange(v).into());
    }
    if out_idx == in_idx {
        return Err(PartitionError::SameSubgraph(out_idx));
    }
    if !p.subgraphs[out_idx].contains(v) {
        return Err(PartitionError::NotAMember {
            vertex: v,
            subgraph: out_idx,
        });
    }
    if p.subgraphs[in_idx].contains(v) {
        return Err(PartitionError::AlreadyMember {
            vertex: v,
            subgraph: in_idx,
        });
    }
    Ok(source_delta(g, p, v, out_idx) + target_delta(g, p, v, in_idx))
}

/// Best destination for `v` leaving `out_idx`: the subgraph not already
/// containing `v` with the largest [`move_cost`], lowest index on ties.
pub fn best_target(g: &ArgumentGraph, p: &Partition, v: usize, out_idx: usize) -> Result<(usize, f64)> {
    check_subgraph(p, out_idx)?;
    if !p.subgraphs[out_idx].contains(v) {
        return Err(PartitionError::NotAMember {
            vertex: v,
            subgraph: out_idx,
        });
    }
    let base = source_delta(g, p, v, out_idx);
    let mut best: Option<(usize, f64)> = None;
    for (idx, s) in p.subgraphs.iter().enumerate() {
        if idx == out_idx || s.contains(v) {
            continue;
        }
        let cost = base + target_delta(g, p, v, idx);
        if best.is_none_or(|(_, c)| cost > c) {
            best = Some((idx, cost));
        }
    }
    best.ok_or(PartitionError::NoEligibleTarget(v))
}

/// Adds `v` to `in_idx`, then either removes it from `out_idx` or, when that
/// removal would lower `wt(out)` by more than `threshold`, keeps it there too.
/// Returns whether the vertex was retained (a soft copy).
pub fn apply_move(
    g: &ArgumentGraph,
    p: &mut Partition,
    v: usize,
    out_idx: usize,
    in_idx: usize,
    threshold: f64,
) -> Result<bool> {
    move_cost(g, p, v, out_idx, in_idx)?;
    let drop = -source_delta(g, p, v, out_idx);
    p.subgraphs[in_idx].insert(v);
    let soft = drop > threshold;
    if !soft {
        p.subgraphs[out_idx].remove(v);
    }
    Ok(soft)
}

fn occurrences(p: &Partition) -> Vec<(usize, usize)> {
    p.subgraphs
        .iter()
        .enumerate()
        .flat_map(|(idx, s)| s.iter().map(move |v| (idx, v)))
        .collect()
}

fn improving_target(g: &ArgumentGraph, p: &Partition, v: usize, out_idx: usize) -> Option<(usize, f64)> {
    // the sole member of a subgraph never leaves it
    if p.subgraphs[out_idx].len() < 2 {
        return None;
    }
    match best_target(g, p, v, out_idx) {
        Ok((to, cost)) if cost > MIN_GAIN => Some((to, cost)),
        _ => None,
    }
}

fn improvement_exists(g: &ArgumentGraph, p: &Partition) -> bool {
    occurrences(p)
        .into_iter()
        .any(|(idx, v)| improving_target(g, p, v, idx).is_some())
}

/// Refines `init` for at most `cfg.max_steps` steps.
///
/// A step draws a `(subgraph, member)` occurrence uniformly at random and
/// relocates the member to its [`best_target`] when the cost is positive (see
/// [`apply_move`] for retention). After every `|V|` consecutive steps without
/// a move, all occurrences are scanned; if none can improve, the search ends.
pub fn local_search(g: &ArgumentGraph, init: &Partition, cfg: &PartitionConfig) -> Result<Partition> {
    if !(cfg.threshold.is_finite() && cfg.threshold >= 0.0) {
        return Err(PartitionError::InvalidConfig(format!(
            "threshold must be finite and non-negative, got {}",
            cfg.threshold
        )));
    }
    init.check_covers(g)?;
    let mut p = init.clone();
    let mut rng = seed::rng(cfg.seed);
    let patience = g.num_vertices().max(1);
    let mut idle = 0;

    for step in 0..cfg.max_steps {
        let occ = occurrences(&p);
        let (out_idx, v) = occ[rng.random_range(0..occ.len())];
        let applied = match improving_target(g, &p, v, out_idx) {
            Some((to, cost)) => {
                let soft = apply_move(g, &mut p, v, out_idx, to, cfg.threshold)?;
                p.moves.push(Move {
                    step,
                    vertex: v,
                    from: out_idx,
                    to,
                    cost,
                    soft,
                });
                true
            }
            None => false,
        };
        if applied {
            idle = 0;
            continue;
        }
        idle += 1;
        if idle >= patience {
            if !improvement_exists(g, &p) {
                log::debug!("local search converged after {} steps", step + 1);
                break;
            }
            idle = 0;
        }
    }
    Ok(p)
}
