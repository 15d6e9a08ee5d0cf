//! Exact solvers for the clustering integer program.
//!
//! [`solve_single_level`] optimises masters and member assignment only;
//! [`solve_bilevel`] adds the super-master level, charging the fixed cost
//! again for every super master. Both run a branch-and-bound over which
//! nodes act as heads, with an exact min-cost-flow assignment at the
//! leaves. [`solve_bruteforce`] enumerates everything and is only meant
//! for instances of at most ten nodes.

mod bruteforce;
mod cfl;
mod flow;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::heuristic::{build_hierarchy_with, HeuristicOptions};
use crate::model::{price_hierarchy, DistanceMatrix, Hierarchy, ModelParams, NodeId, Topology};
use crate::{Error, Result};
use bruteforce::{bruteforce_bilevel, cluster_exhaustive, eligible};
pub use bruteforce::MAX_BRUTEFORCE_NODES;
use cfl::{Cfl, Limits, NoSecondStage, SecondStage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Timeout,
}

/// Search limits. The node limit makes runs reproducible across machines;
/// the time limit is a safety net.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub time_limit: Duration,
    pub node_limit: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { time_limit: Duration::from_secs(300), node_limit: None }
    }
}

impl Budget {
    pub fn seconds(s: f64) -> Self {
        Self { time_limit: Duration::from_secs_f64(s), node_limit: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlpSolution {
    pub hierarchy: Hierarchy,
    pub objective: f64,
    pub level1_cost: f64,
    pub level2_cost: f64,
    pub status: SolveStatus,
    /// Wall-clock seconds.
    pub elapsed: f64,
    pub nodes_explored: u64,
    /// Proven lower bound on the optimum (equals `objective` when optimal).
    pub lower_bound: f64,
    /// Relative gap `(objective - lower_bound) / objective`.
    pub gap: f64,
}

#[derive(Serialize)]
struct SolutionDump<'a> {
    status: SolveStatus,
    objective: f64,
    level1_cost: f64,
    level2_cost: f64,
    masters: Vec<NodeId>,
    super_masters: Vec<NodeId>,
    l1_master_of: &'a [Option<NodeId>],
    l2_master_of: &'a [Option<NodeId>],
    elapsed: f64,
    nodes_explored: u64,
    lower_bound: f64,
    gap: f64,
}

impl IlpSolution {
    fn build(
        topology: &Topology,
        p: &ModelParams,
        hierarchy: Hierarchy,
        status: SolveStatus,
        started: Instant,
        nodes: u64,
        lower_bound: f64,
    ) -> Self {
        let price = price_hierarchy(topology, &hierarchy, p);
        let objective = if status == SolveStatus::Infeasible { f64::INFINITY } else { price.total() };
        let lower_bound = if status == SolveStatus::Optimal { objective } else { lower_bound.min(objective) };
        let gap = if objective.is_finite() && objective > 0.0 { ((objective - lower_bound) / objective).max(0.0) } else { 0.0 };
        Self {
            hierarchy,
            objective,
            level1_cost: price.level1_cost(),
            level2_cost: price.level2_cost(),
            status,
            elapsed: started.elapsed().as_secs_f64(),
            nodes_explored: nodes,
            lower_bound,
            gap,
        }
    }

    fn infeasible(topology: &Topology, p: &ModelParams, started: Instant, nodes: u64) -> Self {
        Self::build(topology, p, Hierarchy::empty(topology.len()), SolveStatus::Infeasible, started, nodes, f64::INFINITY)
    }

    pub fn masters(&self) -> Vec<NodeId> {
        self.hierarchy.masters()
    }

    pub fn super_masters(&self) -> Vec<NodeId> {
        self.hierarchy.super_masters()
    }

    /// JSON dump with status, objective, head lists and assignment maps.
    pub fn to_json(&self) -> serde_json::Value {
        let dump = SolutionDump {
            status: self.status,
            objective: self.objective,
            level1_cost: self.level1_cost,
            level2_cost: self.level2_cost,
            masters: self.masters(),
            super_masters: self.super_masters(),
            l1_master_of: &self.hierarchy.l1_master_of,
            l2_master_of: &self.hierarchy.l2_master_of,
            elapsed: self.elapsed,
            nodes_explored: self.nodes_explored,
            lower_bound: self.lower_bound,
            gap: self.gap,
        };
        serde_json::to_value(dump).expect("solution dump is always serialisable")
    }
}

fn limits_for(budget: &Budget, started: Instant) -> Limits {
    Limits { deadline: started.checked_add(budget.time_limit), node_limit: budget.node_limit }
}

/// Master sets proposed by the greedy heuristic, used as starting incumbents.
fn warm_starts(topology: &Topology, p: &ModelParams) -> Vec<Vec<NodeId>> {
    [false, true]
        .into_iter()
        .map(|force| {
            build_hierarchy_with(topology, p, HeuristicOptions { force_promote_orphans: force }).hierarchy.masters()
        })
        .collect()
}

fn level1_cfl(topology: &Topology, p: &ModelParams) -> Cfl {
    Cfl::new(
        topology.distances(),
        (0..topology.len()).collect(),
        eligible(topology, p),
        p.max_cluster_size_l1,
        p.fixed_cost,
        p.bt_range_m,
    )
}

fn apply_level1(h: &mut Hierarchy, assignment: &[(NodeId, NodeId)]) {
    for &(c, f) in assignment {
        h.l1_master_of[c] = Some(f);
    }
}

/// Optimal masters and member assignment, ignoring the super-master level.
pub fn solve_single_level(topology: &Topology, p: &ModelParams, budget: Budget) -> Result<IlpSolution> {
    p.validate()?;
    let started = Instant::now();
    let cfl = level1_cfl(topology, p);
    let out = cfl.solve(&mut NoSecondStage, &limits_for(&budget, started), &warm_starts(topology, p));
    let Some(best) = out.best else {
        return Ok(if out.exhausted {
            IlpSolution::infeasible(topology, p, started, out.nodes)
        } else {
            let mut s = IlpSolution::infeasible(topology, p, started, out.nodes);
            s.status = SolveStatus::Timeout;
            s
        });
    };
    let mut h = Hierarchy::empty(topology.len());
    apply_level1(&mut h, &best.assignment);
    let status = if out.exhausted { SolveStatus::Optimal } else { SolveStatus::Timeout };
    Ok(IlpSolution::build(topology, p, h, status, started, out.nodes, out.lower_bound))
}

type Level2Plan = Vec<(NodeId, NodeId)>;

enum Priced {
    /// Optimal cost and plan, `None` when the set has no level-2 clustering.
    Solved(Option<(f64, Level2Plan)>),
    /// The optimum is proven to be at least this.
    AtLeast(f64),
}

/// Prices a master set with an exact level-2 clustering, memoised per set.
struct Level2Stage<'a> {
    dist: &'a DistanceMatrix,
    p: &'a ModelParams,
    limits: Limits,
    cache: HashMap<Vec<NodeId>, Priced>,
    incomplete: bool,
    nodes: u64,
}

impl SecondStage for Level2Stage<'_> {
    type Plan = Level2Plan;

    fn evaluate(&mut self, open: &[NodeId], cutoff: f64) -> Option<(f64, Level2Plan)> {
        match self.cache.get(open) {
            Some(Priced::Solved(hit)) => return hit.clone().filter(|(c, _)| *c < cutoff),
            Some(Priced::AtLeast(b)) if *b >= cutoff => return None,
            _ => {}
        }
        let inner = Cfl::new(self.dist, open.to_vec(), open.to_vec(), self.p.max_cluster_size_l2, self.p.fixed_cost, self.p.bt_range_m);
        let out = inner.solve_below(&mut NoSecondStage, &self.limits, &[], cutoff);
        self.nodes += out.nodes;
        let result = out.best.map(|b| (b.first_cost, b.assignment));
        if !out.exhausted {
            self.incomplete = true;
        } else if result.is_some() || cutoff == f64::INFINITY {
            self.cache.insert(open.to_vec(), Priced::Solved(result.clone()));
        } else {
            self.cache.insert(open.to_vec(), Priced::AtLeast(cutoff));
        }
        result
    }
}

/// Optimal two-level clustering: masters, members, super masters and the
/// assignment of masters to super masters.
pub fn solve_bilevel(topology: &Topology, p: &ModelParams, budget: Budget) -> Result<IlpSolution> {
    p.validate()?;
    let started = Instant::now();
    let limits = limits_for(&budget, started);
    let cfl = level1_cfl(topology, p).with_level2(topology.distances(), p.max_cluster_size_l2, p.bt_range_m);
    let mut stage = Level2Stage {
        dist: topology.distances(),
        p,
        limits,
        cache: HashMap::new(),
        incomplete: false,
        nodes: 0,
    };
    let out = cfl.solve(&mut stage, &limits, &warm_starts(topology, p));
    let nodes = out.nodes + stage.nodes;
    let exhausted = out.exhausted && !stage.incomplete;
    let Some(best) = out.best else {
        let mut s = IlpSolution::infeasible(topology, p, started, nodes);
        if !exhausted {
            s.status = SolveStatus::Timeout;
        }
        return Ok(s);
    };
    let mut h = Hierarchy::empty(topology.len());
    apply_level1(&mut h, &best.assignment);
    for &(m, s) in &best.second {
        h.l2_master_of[m] = Some(s);
    }
    let status = if exhausted { SolveStatus::Optimal } else { SolveStatus::Timeout };
    Ok(IlpSolution::build(topology, p, h, status, started, nodes, out.lower_bound))
}

/// Exhaustive two-level optimum for instances of at most
/// [`MAX_BRUTEFORCE_NODES`] nodes.
pub fn solve_bruteforce(topology: &Topology, p: &ModelParams) -> Result<IlpSolution> {
    p.validate()?;
    guard(topology)?;
    let started = Instant::now();
    if topology.is_empty() {
        return Ok(IlpSolution::build(topology, p, Hierarchy::empty(0), SolveStatus::Optimal, started, 0, 0.0));
    }
    let Some((_, l1, l2)) = bruteforce_bilevel(topology, p) else {
        return Ok(IlpSolution::infeasible(topology, p, started, 0));
    };
    let mut h = Hierarchy::empty(topology.len());
    for (i, m) in l1.into_iter().enumerate() {
        h.l1_master_of[i] = Some(m);
    }
    for (m, s) in l2 {
        h.l2_master_of[m] = Some(s);
    }
    Ok(IlpSolution::build(topology, p, h, SolveStatus::Optimal, started, 0, 0.0))
}

/// Exhaustive single-level optimum, the oracle for [`solve_single_level`].
pub fn solve_bruteforce_single_level(topology: &Topology, p: &ModelParams) -> Result<IlpSolution> {
    p.validate()?;
    guard(topology)?;
    let started = Instant::now();
    let all: Vec<NodeId> = (0..topology.len()).collect();
    let Some((_, of)) = cluster_exhaustive(topology.distances(), p, &all, &eligible(topology, p), p.max_cluster_size_l1)
    else {
        return Ok(IlpSolution::infeasible(topology, p, started, 0));
    };
    let mut h = Hierarchy::empty(topology.len());
    for (i, m) in of.into_iter().enumerate() {
        h.l1_master_of[i] = Some(m);
    }
    Ok(IlpSolution::build(topology, p, h, SolveStatus::Optimal, started, 0, 0.0))
}

fn guard(topology: &Topology) -> Result<()> {
    if topology.len() > MAX_BRUTEFORCE_NODES {
        return Err(Error::SizeGuard { n: topology.len(), max: MAX_BRUTEFORCE_NODES });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_hierarchy, validate_level1, NodeSnapshot};

    fn line(xs: &[f64]) -> Topology {
        Topology::from_nodes(xs.iter().enumerate().map(|(i, &x)| NodeSnapshot::new(i, x, 0.0, 1.0, true)).collect()).unwrap()
    }

    fn budget() -> Budget {
        Budget::seconds(30.0)
    }

    #[test]
    fn single_node() {
        let t = line(&[0.0]);
        let p = ModelParams::default();
        assert_eq!(solve_single_level(&t, &p, budget()).unwrap().objective, 100.0);
        assert_eq!(solve_bilevel(&t, &p, budget()).unwrap().objective, 200.0);
        assert_eq!(solve_bruteforce(&t, &p).unwrap().objective, 200.0);
    }

    #[test]
    fn two_nodes_five_metres_apart() {
        let t = line(&[0.0, 5.0]);
        let p = ModelParams::default();
        assert!((solve_bruteforce(&t, &p).unwrap().objective - 205.0).abs() < 1e-9);
        assert!((solve_bilevel(&t, &p, budget()).unwrap().objective - 205.0).abs() < 1e-9);
    }

    #[test]
    fn middle_node_leads_collinear_triple() {
        let t = line(&[0.0, 9.0, 18.0]);
        let p = ModelParams::default();
        for s in [solve_bruteforce(&t, &p).unwrap(), solve_bilevel(&t, &p, budget()).unwrap()] {
            assert!((s.objective - 218.0).abs() < 1e-9);
            assert_eq!(s.masters(), vec![1]);
            assert_eq!(s.super_masters(), vec![1]);
        }
    }

    #[test]
    fn co_located_eight_share_one_head() {
        let t = line(&[0.0; 8]);
        let p = ModelParams::default();
        let s = solve_bilevel(&t, &p, budget()).unwrap();
        assert_eq!(s.masters().len(), 1);
        assert_eq!(s.objective, 200.0);
        assert_eq!(solve_single_level(&t, &p, budget()).unwrap().objective, 100.0);
    }

    #[test]
    fn dense_sixteen_needs_two_masters() {
        let nodes = (0..16).map(|i| NodeSnapshot::new(i, (i % 4) as f64, (i / 4) as f64, 0.9, true)).collect();
        let t = Topology::from_nodes(nodes).unwrap();
        let p = ModelParams::default();
        let s = solve_single_level(&t, &p, budget()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.masters().len(), 2);
        assert!(validate_level1(&t, &s.hierarchy, &p).unwrap().feasible);
    }

    #[test]
    fn no_eligible_node_is_infeasible() {
        let t = Topology::from_nodes(vec![NodeSnapshot::new(0, 0.0, 0.0, 0.2, true)]).unwrap();
        let p = ModelParams::default();
        assert_eq!(solve_bilevel(&t, &p, budget()).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(solve_single_level(&t, &p, budget()).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(solve_bruteforce(&t, &p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn size_guard() {
        let t = line(&[0.0; 11]);
        assert!(matches!(solve_bruteforce(&t, &ModelParams::default()), Err(Error::SizeGuard { n: 11, max: 10 })));
    }

    #[test]
    fn optimal_solutions_validate() {
        let t = line(&[0.0, 3.0, 7.0, 12.0, 15.0, 21.0, 30.0]);
        let p = ModelParams { max_cluster_size_l1: 3, max_cluster_size_l2: 2, ..Default::default() };
        let s = solve_bilevel(&t, &p, budget()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(validate_hierarchy(&t, &s.hierarchy, &p).unwrap().feasible);
        let b = solve_bruteforce(&t, &p).unwrap();
        assert!((s.objective - b.objective).abs() < 1e-9);
        assert!((s.objective - s.level1_cost - s.level2_cost).abs() < 1e-6);
    }

    #[test]
    fn json_dump_fields() {
        let s = solve_bilevel(&line(&[0.0, 5.0]), &ModelParams::default(), budget()).unwrap();
        let v = s.to_json();
        for k in ["status", "objective", "masters", "super_masters", "l1_master_of", "l2_master_of", "elapsed", "nodes_explored"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["status"], "optimal");
    }
}
