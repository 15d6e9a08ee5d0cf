//! Exhaustive enumeration for tiny instances. Deliberately shares no code
//! with the branch-and-bound search so it can serve as an oracle.

use crate::model::{DistanceMatrix, ModelParams, NodeId, Topology};

pub const MAX_BRUTEFORCE_NODES: usize = 10;

/// Best assignment of `clients` to the heads in `heads`, each head holding
/// at most `cap - 1` clients besides itself. Heads are never clients.
/// Returns the total distance and the head of each client, in order.
fn best_assignment(
    dist: &DistanceMatrix,
    p: &ModelParams,
    clients: &[NodeId],
    heads: &[NodeId],
    cap: usize,
) -> Option<(f64, Vec<NodeId>)> {
    fn go(
        k: usize,
        dist: &DistanceMatrix,
        p: &ModelParams,
        clients: &[NodeId],
        heads: &[NodeId],
        load: &mut [usize],
        cap: usize,
        cur: &mut Vec<NodeId>,
        acc: f64,
        best: &mut Option<(f64, Vec<NodeId>)>,
    ) {
        if k == clients.len() {
            if best.as_ref().is_none_or(|b| acc < b.0) {
                *best = Some((acc, cur.clone()));
            }
            return;
        }
        let c = clients[k];
        for (h, &head) in heads.iter().enumerate() {
            let d = dist.get(c, head);
            if load[h] + 1 >= cap || !p.in_range(d) {
                continue;
            }
            load[h] += 1;
            cur.push(head);
            go(k + 1, dist, p, clients, heads, load, cap, cur, acc + d, best);
            cur.pop();
            load[h] -= 1;
        }
    }
    let mut best = None;
    let mut load = vec![0; heads.len()];
    go(0, dist, p, clients, heads, &mut load, cap, &mut Vec::new(), 0.0, &mut best);
    best
}

/// Optimal clustering of `pool` with heads drawn from `candidates`.
/// Returns `(cost, head_of)` where `head_of` is aligned with `pool`.
pub(crate) fn cluster_exhaustive(
    dist: &DistanceMatrix,
    p: &ModelParams,
    pool: &[NodeId],
    candidates: &[NodeId],
    cap: usize,
) -> Option<(f64, Vec<NodeId>)> {
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    for mask in 1u32..(1 << candidates.len()) {
        let heads: Vec<NodeId> = (0..candidates.len()).filter(|&b| mask >> b & 1 == 1).map(|b| candidates[b]).collect();
        let clients: Vec<NodeId> = pool.iter().copied().filter(|c| !heads.contains(c)).collect();
        let Some((d, of)) = best_assignment(dist, p, &clients, &heads, cap) else {
            continue;
        };
        let cost = d + p.fixed_cost * heads.len() as f64;
        if best.as_ref().is_none_or(|b| cost < b.0) {
            let mut head_of = Vec::with_capacity(pool.len());
            let mut it = of.into_iter();
            for &n in pool {
                head_of.push(if heads.contains(&n) { n } else { it.next().unwrap() });
            }
            best = Some((cost, head_of));
        }
    }
    if pool.is_empty() {
        return Some((0.0, Vec::new()));
    }
    best
}

pub(crate) fn eligible(topology: &Topology, p: &ModelParams) -> Vec<NodeId> {
    topology.nodes().iter().filter(|n| n.can_lead(p)).map(|n| n.id).collect()
}

/// Enumerates level-1 clusterings and, for each master set, the optimal
/// level-2 clustering. Returns `(objective, l1 head per node, l2 head per master)`.
pub(crate) fn bruteforce_bilevel(topology: &Topology, p: &ModelParams) -> Option<(f64, Vec<NodeId>, Vec<(NodeId, NodeId)>)> {
    let dist = topology.distances();
    let all: Vec<NodeId> = (0..topology.len()).collect();
    let cand = eligible(topology, p);
    let mut best: Option<(f64, Vec<NodeId>, Vec<(NodeId, NodeId)>)> = None;
    for mask in 1u32..(1 << cand.len()) {
        let heads: Vec<NodeId> = (0..cand.len()).filter(|&b| mask >> b & 1 == 1).map(|b| cand[b]).collect();
        let clients: Vec<NodeId> = all.iter().copied().filter(|c| !heads.contains(c)).collect();
        let Some((d1, of)) = best_assignment(dist, p, &clients, &heads, p.max_cluster_size_l1) else {
            continue;
        };
        let Some((c2, of2)) = cluster_exhaustive(dist, p, &heads, &heads, p.max_cluster_size_l2) else {
            continue;
        };
        let cost = d1 + p.fixed_cost * heads.len() as f64 + c2;
        if best.as_ref().is_none_or(|b| cost < b.0) {
            let mut l1 = all.clone();
            for (c, h) in clients.iter().zip(of) {
                l1[*c] = h;
            }
            let l2 = heads.iter().copied().zip(of2).collect();
            best = Some((cost, l1, l2));
        }
    }
    best
}
