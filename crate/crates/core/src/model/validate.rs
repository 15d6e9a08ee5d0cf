use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Hierarchy, ModelParams, NodeId, Topology};
use crate::error::{Error, Result};

/// Constraint identifiers of the clustering integer program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Constraint {
    /// Every node has exactly one first-level master.
    C8,
    /// First-level cluster size bound; assignment only to masters.
    C9,
    /// Member-to-master distance within Bluetooth range.
    C10,
    /// Every master has exactly one super master; non-masters have none.
    C11,
    /// Second-level cluster size bound; assignment only to super masters.
    C12,
    /// Master-to-super-master distance within Bluetooth range.
    C13,
    /// Super masters are masters.
    C14,
    /// Masters have Wi-Fi.
    C15,
    /// Masters have enough battery.
    C16,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub nodes: Vec<NodeId>,
    /// The measured quantity that breached the bound (distance, cluster
    /// size, battery level, or assignment count).
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort_by(|a, b| a.constraint.cmp(&b.constraint).then_with(|| a.nodes.cmp(&b.nodes)));
        Self { feasible: violations.is_empty(), violations }
    }

    pub fn has(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }
}

/// Checks every constraint of the bi-level model and reports all breaches.
pub fn validate_hierarchy(topology: &Topology, h: &Hierarchy, p: &ModelParams) -> Result<ValidationReport> {
    check(topology, h, p, &BTreeSet::new(), true)
}

/// As [`validate_hierarchy`], but nodes in `exempt` may be left without a
/// first-level master (used for heuristic orphans).
pub fn validate_hierarchy_excluding(
    topology: &Topology,
    h: &Hierarchy,
    p: &ModelParams,
    exempt: &BTreeSet<NodeId>,
) -> Result<ValidationReport> {
    check(topology, h, p, exempt, true)
}

/// Checks only the first-level constraints (C8-C10, C15, C16). Second-level
/// assignments, if present, are ignored.
pub fn validate_level1(topology: &Topology, h: &Hierarchy, p: &ModelParams) -> Result<ValidationReport> {
    check(topology, h, p, &BTreeSet::new(), false)
}

fn check(
    topology: &Topology,
    h: &Hierarchy,
    p: &ModelParams,
    exempt: &BTreeSet<NodeId>,
    level2: bool,
) -> Result<ValidationReport> {
    let n = topology.len();
    if h.l1_master_of.len() != n || h.l2_master_of.len() != n {
        return Err(Error::Structural(format!(
            "hierarchy covers {}/{} nodes, topology has {n}",
            h.l1_master_of.len(),
            h.l2_master_of.len()
        )));
    }
    for (i, target) in h.l1_master_of.iter().chain(h.l2_master_of.iter()).enumerate() {
        if let Some(t) = *target {
            if t >= n {
                return Err(Error::Structural(format!("node {} references missing node {t}", i % n.max(1))));
            }
        }
    }
    if let Some(&e) = exempt.iter().find(|&&e| e >= n) {
        return Err(Error::Structural(format!("exempt node {e} does not exist")));
    }

    let mut v = Vec::new();
    let mut l1_size: BTreeMap<NodeId, usize> = BTreeMap::new();
    for i in 0..n {
        match h.l1_master_of[i] {
            None if !exempt.contains(&i) => v.push(Violation { constraint: Constraint::C8, nodes: vec![i], value: 0.0 }),
            None => {}
            Some(m) => {
                if !h.is_master(m) {
                    v.push(Violation { constraint: Constraint::C9, nodes: vec![i, m], value: 0.0 });
                } else {
                    *l1_size.entry(m).or_default() += 1;
                }
                let d = topology.dist(i, m);
                if !p.in_range(d) {
                    v.push(Violation { constraint: Constraint::C10, nodes: vec![i, m], value: d });
                }
            }
        }
    }
    for (&m, &size) in &l1_size {
        if size > p.max_cluster_size_l1 {
            v.push(Violation { constraint: Constraint::C9, nodes: vec![m], value: size as f64 });
        }
        let node = topology.node(m);
        if !node.has_wifi {
            v.push(Violation { constraint: Constraint::C15, nodes: vec![m], value: 0.0 });
        }
        if !node.battery_ok(p.battery_threshold) {
            v.push(Violation { constraint: Constraint::C16, nodes: vec![m], value: node.battery });
        }
    }

    if level2 {
        let mut l2_size: BTreeMap<NodeId, usize> = BTreeMap::new();
        for i in 0..n {
            let master = h.is_master(i);
            match h.l2_master_of[i] {
                None if master => v.push(Violation { constraint: Constraint::C11, nodes: vec![i], value: 0.0 }),
                None => {}
                Some(s) if !master => {
                    let c = if s == i { Constraint::C14 } else { Constraint::C11 };
                    v.push(Violation { constraint: c, nodes: vec![i], value: 1.0 });
                }
                Some(s) => {
                    if !(h.is_master(s) && h.is_super_master(s)) {
                        v.push(Violation { constraint: Constraint::C12, nodes: vec![i, s], value: 0.0 });
                    } else {
                        *l2_size.entry(s).or_default() += 1;
                    }
                    let d = topology.dist(i, s);
                    if !p.in_range(d) {
                        v.push(Violation { constraint: Constraint::C13, nodes: vec![i, s], value: d });
                    }
                }
            }
        }
        for (&s, &size) in &l2_size {
            if size > p.max_cluster_size_l2 {
                v.push(Violation { constraint: Constraint::C12, nodes: vec![s], value: size as f64 });
            }
        }
    }
    Ok(ValidationReport::from_violations(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSnapshot;

    fn topo(nodes: &[(f64, f64, f64, bool)]) -> Topology {
        Topology::from_nodes(
            nodes.iter().enumerate().map(|(i, &(x, y, b, w))| NodeSnapshot::new(i, x, y, b, w)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_self_contained_is_feasible() {
        let t = topo(&[(0.0, 0.0, 0.9, true)]);
        let h = Hierarchy { l1_master_of: vec![Some(0)], l2_master_of: vec![Some(0)] };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.violations.is_empty());
    }

    #[test]
    fn member_out_of_range_is_c10() {
        let t = topo(&[(0.0, 0.0, 0.9, true), (12.0, 0.0, 0.9, true)]);
        let h = Hierarchy { l1_master_of: vec![Some(0), Some(0)], l2_master_of: vec![Some(0), None] };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violations, vec![Violation { constraint: Constraint::C10, nodes: vec![1, 0], value: 12.0 }]);
    }

    #[test]
    fn master_without_wifi_is_c15() {
        let t = topo(&[(0.0, 0.0, 0.9, false)]);
        let h = Hierarchy { l1_master_of: vec![Some(0)], l2_master_of: vec![Some(0)] };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        assert!(r.has(Constraint::C15));
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn reports_every_violation() {
        // node 0: low battery master; node 1: unassigned; node 2: member of non-master 3;
        // node 3: claims to be super master without being a master.
        let t = topo(&[(0.0, 0.0, 0.2, true), (1.0, 0.0, 0.9, true), (2.0, 0.0, 0.9, true), (3.0, 0.0, 0.9, true)]);
        let h = Hierarchy {
            l1_master_of: vec![Some(0), None, Some(3), None],
            l2_master_of: vec![None, None, None, Some(3)],
        };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        let ids: Vec<Constraint> = r.violations.iter().map(|v| v.constraint).collect();
        assert_eq!(
            ids,
            vec![Constraint::C8, Constraint::C8, Constraint::C9, Constraint::C11, Constraint::C14, Constraint::C16]
        );
        // pure: same answer twice
        assert_eq!(r, validate_hierarchy(&t, &h, &ModelParams::default()).unwrap());
    }

    #[test]
    fn cluster_size_bounds() {
        let nodes: Vec<_> = (0..9).map(|i| (i as f64 * 0.5, 0.0, 0.9, true)).collect();
        let t = topo(&nodes);
        let h = Hierarchy { l1_master_of: vec![Some(0); 9], l2_master_of: {
            let mut v = vec![None; 9];
            v[0] = Some(0);
            v
        } };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        assert_eq!(r.violations, vec![Violation { constraint: Constraint::C9, nodes: vec![0], value: 9.0 }]);

        let p = ModelParams { max_cluster_size_l2: 1, ..Default::default() };
        let h = Hierarchy {
            l1_master_of: (0..9).map(Some).collect(),
            l2_master_of: (0..9).map(|i| Some(if i < 2 { 0 } else { i })).collect(),
        };
        let r = validate_hierarchy(&t, &h, &p).unwrap();
        assert_eq!(r.violations, vec![Violation { constraint: Constraint::C12, nodes: vec![0], value: 2.0 }]);
    }

    #[test]
    fn super_master_range_is_c13() {
        let t = topo(&[(0.0, 0.0, 0.9, true), (10.5, 0.0, 0.9, true)]);
        let h = Hierarchy { l1_master_of: vec![Some(0), Some(1)], l2_master_of: vec![Some(0), Some(0)] };
        let r = validate_hierarchy(&t, &h, &ModelParams::default()).unwrap();
        assert_eq!(r.violations, vec![Violation { constraint: Constraint::C13, nodes: vec![1, 0], value: 10.5 }]);
    }

    #[test]
    fn dangling_reference_is_structural() {
        let t = topo(&[(0.0, 0.0, 0.9, true)]);
        let h = Hierarchy { l1_master_of: vec![Some(4)], l2_master_of: vec![None] };
        assert!(matches!(validate_hierarchy(&t, &h, &ModelParams::default()), Err(Error::Structural(_))));
        let h = Hierarchy { l1_master_of: vec![Some(0), Some(0)], l2_master_of: vec![None, None] };
        assert!(matches!(validate_hierarchy(&t, &h, &ModelParams::default()), Err(Error::Structural(_))));
    }

    #[test]
    fn exempt_and_level1_modes() {
        let t = topo(&[(0.0, 0.0, 0.9, true), (40.0, 0.0, 0.1, false)]);
        let h = Hierarchy { l1_master_of: vec![Some(0), None], l2_master_of: vec![Some(0), None] };
        let exempt = BTreeSet::from([1]);
        assert!(validate_hierarchy_excluding(&t, &h, &ModelParams::default(), &exempt).unwrap().feasible);
        assert!(!validate_hierarchy(&t, &h, &ModelParams::default()).unwrap().feasible);
        let h1 = Hierarchy { l1_master_of: vec![Some(0), None], l2_master_of: vec![None, None] };
        let r = validate_level1(&t, &h1, &ModelParams::default()).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].constraint, Constraint::C8);
    }
}
