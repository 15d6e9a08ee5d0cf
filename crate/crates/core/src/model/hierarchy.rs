use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ModelParams, NodeId, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Not attached to any master.
    Unassigned,
    Member,
    Master,
    SuperMaster,
}

/// Two-level cluster assignment.
///
/// A node is a master iff it is its own first-level master, and a super
/// master iff it is its own second-level master. Only masters carry a
/// second-level assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub l1_master_of: Vec<Option<NodeId>>,
    pub l2_master_of: Vec<Option<NodeId>>,
}

impl Hierarchy {
    pub fn empty(n: usize) -> Self {
        Self { l1_master_of: vec![None; n], l2_master_of: vec![None; n] }
    }

    pub fn len(&self) -> usize {
        self.l1_master_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l1_master_of.is_empty()
    }

    pub fn is_master(&self, i: NodeId) -> bool {
        self.l1_master_of[i] == Some(i)
    }

    pub fn is_super_master(&self, i: NodeId) -> bool {
        self.l2_master_of.get(i).copied().flatten() == Some(i)
    }

    pub fn role(&self, i: NodeId) -> Role {
        if self.is_super_master(i) && self.is_master(i) {
            Role::SuperMaster
        } else if self.is_master(i) {
            Role::Master
        } else if self.l1_master_of[i].is_some() {
            Role::Member
        } else {
            Role::Unassigned
        }
    }

    /// Masters in ascending id order (super masters included).
    pub fn masters(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&i| self.is_master(i)).collect()
    }

    pub fn super_masters(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&i| self.is_master(i) && self.is_super_master(i)).collect()
    }

    pub fn unassigned(&self) -> BTreeSet<NodeId> {
        (0..self.len()).filter(|&i| self.l1_master_of[i].is_none()).collect()
    }

    /// First-level clusters: master -> members (master excluded), ascending ids.
    pub fn l1_clusters(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = self.masters().into_iter().map(|m| (m, Vec::new())).collect();
        for (i, m) in self.l1_master_of.iter().enumerate() {
            if let Some(m) = *m {
                if m != i {
                    out.entry(m).or_default().push(i);
                }
            }
        }
        out
    }

    /// Second-level clusters: super master -> member masters (super master
    /// excluded), ascending ids.
    pub fn l2_clusters(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> =
            self.super_masters().into_iter().map(|s| (s, Vec::new())).collect();
        for (i, s) in self.l2_master_of.iter().enumerate() {
            if let Some(s) = *s {
                if s != i {
                    out.entry(s).or_default().push(i);
                }
            }
        }
        out
    }

    /// Number of first-level members attached to `master` (master excluded).
    pub fn member_count(&self, master: NodeId) -> usize {
        self.l1_master_of.iter().enumerate().filter(|&(i, m)| *m == Some(master) && i != master).count()
    }
}

/// The four objective terms: first-level distance and fixed cost, then the
/// same two terms for the second level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub level1_distance: f64,
    pub level1_fixed: f64,
    pub level2_distance: f64,
    pub level2_fixed: f64,
}

impl ObjectiveBreakdown {
    pub fn level1_cost(&self) -> f64 {
        self.level1_distance + self.level1_fixed
    }

    pub fn level2_cost(&self) -> f64 {
        self.level2_distance + self.level2_fixed
    }

    pub fn total(&self) -> f64 {
        self.level1_cost() + self.level2_cost()
    }
}

/// Prices a hierarchy with the clustering objective. Unassigned nodes
/// contribute nothing. Sums run in ascending node order.
pub fn price_hierarchy(topology: &Topology, h: &Hierarchy, p: &ModelParams) -> ObjectiveBreakdown {
    let mut out = ObjectiveBreakdown { level1_distance: 0.0, level1_fixed: 0.0, level2_distance: 0.0, level2_fixed: 0.0 };
    for i in 0..h.len() {
        if let Some(m) = h.l1_master_of[i] {
            out.level1_distance += topology.dist(i, m);
        }
        if h.is_master(i) {
            out.level1_fixed += p.fixed_cost;
        }
    }
    for i in 0..h.len() {
        if let Some(s) = h.l2_master_of[i] {
            out.level2_distance += topology.dist(i, s);
        }
        if h.is_master(i) && h.is_super_master(i) {
            out.level2_fixed += p.fixed_cost;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSnapshot;

    #[test]
    fn roles_and_clusters() {
        // 0 super master, 1 master under 0, 2 member of 0, 3 member of 1, 4 unassigned
        let h = Hierarchy {
            l1_master_of: vec![Some(0), Some(1), Some(0), Some(1), None],
            l2_master_of: vec![Some(0), Some(0), None, None, None],
        };
        assert_eq!(h.role(0), Role::SuperMaster);
        assert_eq!(h.role(1), Role::Master);
        assert_eq!(h.role(2), Role::Member);
        assert_eq!(h.role(4), Role::Unassigned);
        assert_eq!(h.masters(), vec![0, 1]);
        assert_eq!(h.super_masters(), vec![0]);
        assert_eq!(h.l1_clusters()[&0], vec![2]);
        assert_eq!(h.l2_clusters()[&0], vec![1]);
        assert_eq!(h.member_count(1), 1);
        assert_eq!(h.unassigned().into_iter().collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn pricing_charges_fixed_cost_twice_for_super_master() {
        let t = Topology::from_nodes(vec![
            NodeSnapshot::new(0, 0.0, 0.0, 0.9, true),
            NodeSnapshot::new(1, 5.0, 0.0, 0.9, true),
        ])
        .unwrap();
        let h = Hierarchy { l1_master_of: vec![Some(0), Some(0)], l2_master_of: vec![Some(0), None] };
        let z = price_hierarchy(&t, &h, &ModelParams::default());
        assert_eq!(z.total(), 205.0);
        assert_eq!(z.level1_cost(), 105.0);
        assert_eq!(z.level2_cost(), 100.0);
    }
}
