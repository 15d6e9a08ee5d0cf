//! TDMA slot plans and the delay bounds for one- and two-level clusters.
//!
//! Time is cut into 625 µs slots; a master polls in even slots and the
//! polled member answers in the following odd slot, so one member uplink
//! takes a cycle `T = 1250 µs`. Level-1 clusters run concurrently. Inside
//! a super cluster everything that reaches the super master is serialised:
//! its own members first, then each member master (ascending id) with its
//! own frame followed by the frames it relays for its members.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::model::{Hierarchy, NodeId};
use crate::{Error, Result};

/// Whole microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-6
    }
}

impl Add for Micros {
    type Output = Micros;

    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl Mul<u64> for Micros {
    type Output = Micros;

    fn mul(self, rhs: u64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} us", self.0)
    }
}

pub const SLOT: Micros = Micros(625);
/// One poll/response cycle, two slots.
pub const T: Micros = Micros(1250);

/// Time for a level-1 cluster with `members` members to report.
pub fn tts_level1(members: usize, t: Micros) -> Micros {
    t * members as u64
}

/// Worst level-1 cluster delay. Clusters run in parallel, so this is also
/// the system delay of a one-level network.
pub fn d1_max(member_counts: &[usize], t: Micros) -> Result<Micros> {
    member_counts
        .iter()
        .map(|&n| tts_level1(n, t))
        .max()
        .ok_or_else(|| Error::Parameter("d1_max needs at least one cluster".into()))
}

/// A super master with the member counts of the clusters below it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperCluster {
    pub super_master: NodeId,
    /// Level-1 members of the super master's own cluster.
    pub own_members: usize,
    /// `(master, level-1 member count)`, ascending master id.
    pub member_masters: Vec<(NodeId, usize)>,
}

impl SuperCluster {
    /// Extracts the super cluster headed by `s` from a hierarchy.
    pub fn from_hierarchy(h: &Hierarchy, s: NodeId) -> Result<Self> {
        if s >= h.len() || !h.is_master(s) || !h.is_super_master(s) {
            return Err(Error::Structural(format!("node {s} is not a super master")));
        }
        let l1 = h.l1_clusters();
        let count = |m: NodeId| l1.get(&m).map_or(0, Vec::len);
        let member_masters = (0..h.len())
            .filter(|&m| m != s && h.is_master(m) && h.l2_master_of[m] == Some(s))
            .map(|m| (m, count(m)))
            .collect();
        Ok(Self { super_master: s, own_members: count(s), member_masters })
    }
}

/// Time for a super cluster to deliver everything to its super master:
/// one cycle per own member, and for each member master one cycle per
/// member plus one for the master itself.
pub fn tts_level2(cluster: &SuperCluster, t: Micros) -> Micros {
    let frames: usize = cluster.own_members + cluster.member_masters.iter().map(|&(_, n)| n + 1).sum::<usize>();
    t * frames as u64
}

/// Per-cluster delays of a hierarchy, in whole microseconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayReport {
    pub cycle_us: Micros,
    /// Level-1 `tts` per master.
    pub level1: BTreeMap<NodeId, Micros>,
    pub d1_max: Micros,
    /// Level-2 `tts` per super master.
    pub level2: BTreeMap<NodeId, Micros>,
    pub td2: Micros,
}

/// Delay bounds of every cluster. Masters without a super master are left
/// out of level 2; an empty hierarchy reports zero everywhere.
pub fn total_delay_bilevel(h: &Hierarchy, t: Micros) -> Result<DelayReport> {
    let level1: BTreeMap<NodeId, Micros> =
        h.l1_clusters().into_iter().map(|(m, members)| (m, tts_level1(members.len(), t))).collect();
    let mut level2 = BTreeMap::new();
    for s in h.super_masters() {
        level2.insert(s, tts_level2(&SuperCluster::from_hierarchy(h, s)?, t));
    }
    Ok(DelayReport {
        cycle_us: t,
        d1_max: level1.values().copied().max().unwrap_or(Micros::ZERO),
        td2: level2.values().copied().max().unwrap_or(Micros::ZERO),
        level1,
        level2,
    })
}

/// One uplink frame. `slot` is the (odd) slot index the sender transmits
/// in, counted from the start of its timeline; the receiver polls in the
/// even slot before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub sender: NodeId,
    pub receiver: NodeId,
    /// Node whose data the frame carries.
    pub origin: NodeId,
    pub slot: u64,
}

impl Transmission {
    pub fn end(&self, slot_len: Micros) -> Micros {
        slot_len * (self.slot + 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotPlan {
    pub slot_len: Micros,
    pub cycle: Micros,
    /// Per level-1 master: member uplinks in member-id order.
    pub level1: BTreeMap<NodeId, Vec<Transmission>>,
    /// Per super master: every frame it receives, in delivery order.
    pub level2: BTreeMap<NodeId, Vec<Transmission>>,
}

impl SlotPlan {
    /// Slot of `member` inside its level-1 cluster.
    pub fn level1_slot(&self, master: NodeId, member: NodeId) -> Option<u64> {
        self.level1.get(&master)?.iter().find(|x| x.sender == member).map(|x| x.slot)
    }

    fn finish(&self, timeline: Option<&Vec<Transmission>>) -> Micros {
        timeline.and_then(|v| v.last()).map_or(Micros::ZERO, |x| x.end(self.slot_len))
    }

    pub fn level1_finish(&self, master: NodeId) -> Micros {
        self.finish(self.level1.get(&master))
    }

    pub fn level2_finish(&self, super_master: NodeId) -> Micros {
        self.finish(self.level2.get(&super_master))
    }

    /// Completion of the last level-2 delivery anywhere.
    pub fn makespan_level2(&self) -> Micros {
        self.level2.keys().map(|&s| self.level2_finish(s)).max().unwrap_or(Micros::ZERO)
    }
}

/// Slot assignment consistent with [`total_delay_bilevel`]: member `k` of
/// a cluster (by ascending id) answers in slot `2k + 1`. The cycle length
/// `t` is split into two equal slots.
pub fn build_slot_plan(h: &Hierarchy, t: Micros) -> SlotPlan {
    let slot_len = Micros(t.0 / 2);
    let clusters = h.l1_clusters();
    let level1 = clusters
        .iter()
        .map(|(&m, members)| {
            let tx = members
                .iter()
                .enumerate()
                .map(|(k, &i)| Transmission { sender: i, receiver: m, origin: i, slot: 2 * k as u64 + 1 })
                .collect();
            (m, tx)
        })
        .collect();
    let mut level2 = BTreeMap::new();
    for s in h.super_masters().into_iter().filter(|&s| h.is_master(s)) {
        let mut tx = Vec::new();
        let mut push = |sender: NodeId, origin: NodeId| {
            let slot = 2 * tx.len() as u64 + 1;
            tx.push(Transmission { sender, receiver: s, origin, slot });
        };
        for &i in clusters.get(&s).into_iter().flatten() {
            push(i, i);
        }
        for m in (0..h.len()).filter(|&m| m != s && h.is_master(m) && h.l2_master_of[m] == Some(s)) {
            push(m, m);
            for &i in clusters.get(&m).into_iter().flatten() {
                push(m, i);
            }
        }
        level2.insert(s, tx);
    }
    SlotPlan { slot_len, cycle: t, level1, level2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds a hierarchy from `(super master, own members, [member-master sizes])`.
    fn layered(clusters: &[(usize, &[usize])]) -> Hierarchy {
        let mut h = Hierarchy::empty(0);
        let add = |head: Option<NodeId>, h: &mut Hierarchy| {
            let id = h.len();
            h.l1_master_of.push(Some(head.unwrap_or(id)));
            h.l2_master_of.push(None);
            id
        };
        for &(own, masters) in clusters {
            let s = add(None, &mut h);
            h.l2_master_of[s] = Some(s);
            for _ in 0..own {
                add(Some(s), &mut h);
            }
            for &n in masters {
                let m = add(None, &mut h);
                h.l2_master_of[m] = Some(s);
                for _ in 0..n {
                    add(Some(m), &mut h);
                }
            }
        }
        h
    }

    #[test]
    fn level1_examples() {
        assert_eq!(tts_level1(7, T), Micros(8750));
        assert_eq!(tts_level1(0, T), Micros::ZERO);
        assert_eq!(tts_level1(1, T), Micros(1250));
        assert_eq!(d1_max(&[7, 7, 7], T).unwrap(), T * 7);
        assert_eq!(d1_max(&[2, 5, 3], T).unwrap(), T * 5);
        assert_eq!(d1_max(&[0], T).unwrap(), Micros::ZERO);
        assert!(d1_max(&[], T).is_err());
    }

    #[test]
    fn two_super_clusters() {
        let h = layered(&[(4, &[7, 3, 4]), (4, &[4, 7])]);
        let r = total_delay_bilevel(&h, T).unwrap();
        let tts: Vec<Micros> = r.level2.values().copied().collect();
        assert_eq!(tts, vec![T * 21, T * 17]);
        assert_eq!(r.td2, T * 21);
        assert_eq!(r.d1_max, T * 7);
        let plan = build_slot_plan(&h, T);
        assert_eq!(plan.level2_finish(0), T * 21);
        assert_eq!(plan.makespan_level2(), r.td2);
    }

    #[test]
    fn super_master_alone_with_members() {
        let h = layered(&[(5, &[])]);
        assert_eq!(tts_level2(&SuperCluster::from_hierarchy(&h, 0).unwrap(), T), T * 5);
        assert_eq!(total_delay_bilevel(&layered(&[(7, &[])]), T).unwrap().td2, T * 7);
    }

    #[test]
    fn singletons_have_no_delay() {
        let h = layered(&[(0, &[]), (0, &[]), (0, &[])]);
        let r = total_delay_bilevel(&h, T).unwrap();
        assert_eq!((r.d1_max, r.td2), (Micros::ZERO, Micros::ZERO));
    }

    #[test]
    fn non_super_master_rejected() {
        let h = layered(&[(2, &[3])]);
        assert!(matches!(SuperCluster::from_hierarchy(&h, 3), Err(Error::Structural(_))));
        assert!(SuperCluster::from_hierarchy(&h, 99).is_err());
    }

    #[test]
    fn members_take_odd_slots_in_id_order() {
        let h = layered(&[(2, &[])]);
        let plan = build_slot_plan(&h, T);
        assert_eq!(plan.level1_slot(0, 1), Some(1));
        assert_eq!(plan.level1_slot(0, 2), Some(3));
        assert_eq!(plan.slot_len, SLOT);
    }

    #[test]
    fn empty_hierarchy() {
        let h = Hierarchy::empty(0);
        let plan = build_slot_plan(&h, T);
        assert!(plan.level1.is_empty() && plan.level2.is_empty());
        let r = total_delay_bilevel(&h, T).unwrap();
        assert_eq!(r.td2, Micros::ZERO);
    }

    #[test]
    fn report_serialises_integer_micros() {
        let r = total_delay_bilevel(&layered(&[(1, &[])]), T).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["td2"], 1250);
        assert_eq!(v["cycle_us"], 1250);
    }

    fn arb_layout() -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
        prop::collection::vec((0usize..8, prop::collection::vec(0usize..8, 0..7)), 1..5)
    }

    proptest! {
        #[test]
        fn plan_agrees_with_formula(layout in arb_layout()) {
            let clusters: Vec<(usize, &[usize])> = layout.iter().map(|(o, m)| (*o, m.as_slice())).collect();
            let h = layered(&clusters);
            let r = total_delay_bilevel(&h, T).unwrap();
            let plan = build_slot_plan(&h, T);
            prop_assert_eq!(plan.makespan_level2(), r.td2);
            for (&s, &tts) in &r.level2 {
                prop_assert_eq!(plan.level2_finish(s), tts);
            }
            for (&m, &tts) in &r.level1 {
                prop_assert_eq!(plan.level1_finish(m), tts);
                prop_assert!(tts <= T * 7);
                prop_assert_eq!(tts.0 % SLOT.0, 0);
            }
            // every member-of-a-member frame is relayed exactly once
            let delivered: usize = plan.level2.values().map(Vec::len).sum();
            let masters = h.masters().len();
            let supers = h.super_masters().len();
            prop_assert_eq!(delivered, h.len() - supers);
            prop_assert!(masters >= supers);
        }

        #[test]
        fn adding_a_member_never_shrinks_tts(own in 0usize..7, masters in prop::collection::vec(0usize..7, 0..5), pick in 0usize..6) {
            let base = SuperCluster { super_master: 0, own_members: own, member_masters: masters.iter().enumerate().map(|(i, &n)| (i + 1, n)).collect() };
            let mut grown = base.clone();
            if pick < grown.member_masters.len() {
                grown.member_masters[pick].1 += 1;
            } else {
                grown.own_members += 1;
            }
            prop_assert!(tts_level2(&grown, T) > tts_level2(&base, T));
        }
    }
}
