//! Greedy two-level clustering.
//!
//! Each round elects the unassigned eligible node with the highest battery
//! as head and lets it absorb its nearest unassigned neighbours within
//! Bluetooth range, up to the cluster size bound. The first level runs over
//! all nodes, the second level over the resulting masters. Ties are broken
//! towards the lower node id, both for election and for absorption.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hierarchy, ModelParams, NodeId, Topology};

/// One election round, kept for audit traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRound {
    /// 1 for first-level rounds, 2 for second-level rounds.
    pub level: u8,
    pub elected_head: NodeId,
    pub absorbed: Vec<NodeId>,
    /// Unassigned nodes left in the pool after this round.
    pub remaining_pool: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOptions {
    /// Promote orphans that have Wi-Fi to masters regardless of battery.
    /// The resulting hierarchy can then breach the battery constraint.
    pub force_promote_orphans: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level1Outcome {
    /// First-level assignment only; `l2_master_of` is all `None`.
    pub hierarchy: Hierarchy,
    pub orphans: BTreeSet<NodeId>,
    pub trace: Vec<ClusterRound>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level2Outcome {
    pub hierarchy: Hierarchy,
    pub trace: Vec<ClusterRound>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicOutcome {
    pub hierarchy: Hierarchy,
    pub orphans: BTreeSet<NodeId>,
    pub trace: Vec<ClusterRound>,
}

/// Highest battery among pool nodes accepted by `eligible`; lower id on ties.
fn elect(topology: &Topology, pool: &[bool], eligible: impl Fn(NodeId) -> bool) -> Option<NodeId> {
    let mut best: Option<NodeId> = None;
    for i in (0..pool.len()).filter(|&i| pool[i] && eligible(i)) {
        match best {
            Some(b) if topology.node(i).battery <= topology.node(b).battery => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Nearest pool nodes within range of `head`, at most `limit` of them.
fn absorb(topology: &Topology, pool: &[bool], head: NodeId, limit: usize, p: &ModelParams) -> Vec<NodeId> {
    let mut cands: Vec<NodeId> =
        (0..pool.len()).filter(|&i| pool[i] && i != head && p.in_range(topology.dist(head, i))).collect();
    cands.sort_by(|&a, &b| topology.dist(head, a).total_cmp(&topology.dist(head, b)).then(a.cmp(&b)));
    cands.truncate(limit);
    cands.sort_unstable();
    cands
}

fn run_rounds(
    topology: &Topology,
    pool: &mut [bool],
    level: u8,
    limit: usize,
    p: &ModelParams,
    eligible: impl Fn(NodeId) -> bool,
    mut attach: impl FnMut(NodeId, &[NodeId]),
    trace: &mut Vec<ClusterRound>,
) {
    let mut remaining = pool.iter().filter(|&&b| b).count();
    while let Some(head) = elect(topology, pool, &eligible) {
        pool[head] = false;
        let absorbed = absorb(topology, pool, head, limit, p);
        for &i in &absorbed {
            pool[i] = false;
        }
        remaining -= 1 + absorbed.len();
        attach(head, &absorbed);
        trace.push(ClusterRound { level, elected_head: head, absorbed, remaining_pool: remaining });
    }
}

pub fn cluster_level1(topology: &Topology, p: &ModelParams) -> Level1Outcome {
    cluster_level1_with(topology, p, HeuristicOptions::default())
}

pub fn cluster_level1_with(topology: &Topology, p: &ModelParams, opts: HeuristicOptions) -> Level1Outcome {
    let n = topology.len();
    let mut h = Hierarchy::empty(n);
    let mut pool = vec![true; n];
    let mut trace = Vec::new();
    let limit = p.max_cluster_size_l1.saturating_sub(1);
    let mut attach = |head: NodeId, members: &[NodeId]| {
        h.l1_master_of[head] = Some(head);
        for &m in members {
            h.l1_master_of[m] = Some(head);
        }
    };
    run_rounds(topology, &mut pool, 1, limit, p, |i| topology.node(i).can_lead(p), &mut attach, &mut trace);
    if opts.force_promote_orphans {
        run_rounds(topology, &mut pool, 1, limit, p, |i| topology.node(i).has_wifi, &mut attach, &mut trace);
    }
    let orphans = (0..n).filter(|&i| pool[i]).collect();
    Level1Outcome { hierarchy: h, orphans, trace }
}

/// Groups the masters of `level1` under super masters. Every master ends up
/// in exactly one second-level cluster; isolated masters head their own.
pub fn cluster_level2(topology: &Topology, level1: &Hierarchy, p: &ModelParams) -> Result<Level2Outcome> {
    let n = topology.len();
    if level1.len() != n {
        return Err(Error::Structural(format!("level-1 assignment covers {} nodes, topology has {n}", level1.len())));
    }
    for (i, m) in level1.l1_master_of.iter().enumerate() {
        if let Some(m) = *m {
            if m >= n || !level1.is_master(m) {
                return Err(Error::Structural(format!("node {i} is attached to {m}, which is not a master")));
            }
        }
    }
    let mut h = Hierarchy { l1_master_of: level1.l1_master_of.clone(), l2_master_of: vec![None; n] };
    let mut pool: Vec<bool> = (0..n).map(|i| level1.is_master(i)).collect();
    let mut trace = Vec::new();
    let limit = p.max_cluster_size_l2.saturating_sub(1);
    run_rounds(
        topology,
        &mut pool,
        2,
        limit,
        p,
        |_| true,
        |head, members| {
            h.l2_master_of[head] = Some(head);
            for &m in members {
                h.l2_master_of[m] = Some(head);
            }
        },
        &mut trace,
    );
    Ok(Level2Outcome { hierarchy: h, trace })
}

pub fn build_hierarchy(topology: &Topology, p: &ModelParams) -> HeuristicOutcome {
    build_hierarchy_with(topology, p, HeuristicOptions::default())
}

pub fn build_hierarchy_with(topology: &Topology, p: &ModelParams, opts: HeuristicOptions) -> HeuristicOutcome {
    let l1 = cluster_level1_with(topology, p, opts);
    let l2 = cluster_level2(topology, &l1.hierarchy, p).expect("level-1 output is well formed");
    let mut trace = l1.trace;
    trace.extend(l2.trace);
    HeuristicOutcome { hierarchy: l2.hierarchy, orphans: l1.orphans, trace }
}
