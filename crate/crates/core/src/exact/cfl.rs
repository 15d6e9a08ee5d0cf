//! Capacitated facility location with self-service, solved exactly by
//! branch-and-bound over the open/closed status of each facility.
//!
//! Every open facility serves itself (it takes one slot of its capacity)
//! and up to `capacity - 1` other clients within range. Bounds come from a
//! Lagrangian relaxation of the "each client is served exactly once"
//! constraints, strengthened with a minimum number of open facilities;
//! the multipliers are tuned by subgradient ascent and inherited by child
//! nodes. A pluggable second stage lets the bi-level solver price the open
//! set with an exact level-2 solve while reusing the same search.

use std::collections::HashSet;
use std::time::Instant;

use super::flow::min_cost_assignment;
use crate::model::{DistanceMatrix, NodeId, RANGE_EPS};

const EPS: f64 = 1e-6;
const ROOT_ITERS: usize = 300;
const NODE_ITERS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Fix {
    Free,
    Open,
    Closed,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Limits {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
}

impl Limits {
    fn hit(&self, nodes: u64) -> bool {
        self.node_limit.is_some_and(|l| nodes >= l) || self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Prices the facilities chosen by the first stage.
pub(crate) trait SecondStage {
    type Plan: Clone;

    /// Exact second-stage cost of an open set (global ids, ascending) when
    /// it is below `cutoff`; `None` when no second-stage solution is that
    /// cheap.
    fn evaluate(&mut self, open: &[NodeId], cutoff: f64) -> Option<(f64, Self::Plan)>;
}

/// Second stage that costs nothing; turns the search into a plain CFL solve.
pub(crate) struct NoSecondStage;

impl SecondStage for NoSecondStage {
    type Plan = ();

    fn evaluate(&mut self, _: &[NodeId], cutoff: f64) -> Option<(f64, ())> {
        (cutoff > 0.0).then_some((0.0, ()))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CflPlan<P> {
    /// `(client, facility)` in global ids, one entry per client.
    pub assignment: Vec<(NodeId, NodeId)>,
    pub first_cost: f64,
    pub second: P,
}

#[derive(Clone, Debug)]
pub(crate) struct CflOutcome<P> {
    pub best: Option<CflPlan<P>>,
    /// The search space was fully explored, so `best` is optimal (or the
    /// instance infeasible when `best` is `None`).
    pub exhausted: bool,
    pub lower_bound: f64,
    pub nodes: u64,
}

pub(crate) struct Cfl {
    clients: Vec<NodeId>,
    facilities: Vec<NodeId>,
    capacity: usize,
    open_cost: f64,
    fac_client: Vec<Option<usize>>,
    client_fac: Vec<Option<usize>>,
    /// Per facility: `(client, distance)` in range, own client excluded.
    by_fac: Vec<Vec<(usize, f64)>>,
    /// Per client: `(facility, distance)` in range, own facility excluded.
    by_client: Vec<Vec<(usize, f64)>>,
    min_open: usize,
    level2: Option<Level2>,
}

/// Second clustering level over the open facilities, folded into the bound.
struct Level2 {
    capacity: usize,
    /// Per facility: `(facility, distance)` in range, itself excluded.
    arcs: Vec<Vec<(usize, f64)>>,
    min_super: usize,
}

const CLOSED: u8 = 0;
const OPEN: u8 = 1;
const SUPER: u8 = 2;

/// Relaxed solution for one multiplier vector.
#[derive(Clone)]
struct Sub {
    value: f64,
    state: Vec<u8>,
    /// Cost of each facility state, `INFINITY` where not allowed.
    options: Vec<[f64; 3]>,
    g: Vec<f64>,
    constant: f64,
}

struct Node {
    fix: Vec<Fix>,
    mult: Vec<f64>,
    bound: f64,
}

/// Keeps the `take` most negative entries of `buf`.
fn keep_best(buf: &mut Vec<(f64, usize)>, take: usize) {
    if buf.len() > take {
        if take == 0 {
            buf.clear();
        } else {
            buf.select_nth_unstable_by(take - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            buf.truncate(take);
        }
    }
}

impl Cfl {
    pub fn new(
        dist: &DistanceMatrix,
        clients: Vec<NodeId>,
        facilities: Vec<NodeId>,
        capacity: usize,
        open_cost: f64,
        range: f64,
    ) -> Self {
        assert!(capacity >= 1);
        let fac_client: Vec<Option<usize>> =
            facilities.iter().map(|&f| clients.iter().position(|&c| c == f)).collect();
        let mut client_fac = vec![None; clients.len()];
        for (j, c) in fac_client.iter().enumerate() {
            if let Some(c) = *c {
                client_fac[c] = Some(j);
            }
        }
        let mut by_fac = vec![Vec::new(); facilities.len()];
        let mut by_client = vec![Vec::new(); clients.len()];
        for (j, &f) in facilities.iter().enumerate() {
            for (i, &c) in clients.iter().enumerate() {
                if c == f {
                    continue;
                }
                let d = dist.get(c, f);
                if d <= range + RANGE_EPS {
                    by_fac[j].push((i, d));
                    by_client[i].push((j, d));
                }
            }
        }
        let min_open = clients.len().div_ceil(capacity);
        Self { clients, facilities, capacity, open_cost, fac_client, client_fac, by_fac, by_client, min_open, level2: None }
    }

    /// Adds a second level: every open facility must itself be served by an
    /// open "super" facility in range, at most `capacity` per super facility
    /// including itself, and each super facility costs `open_cost` again.
    /// The bound then covers both levels; the exact level-2 cost of a
    /// candidate still comes from the [`SecondStage`].
    pub fn with_level2(mut self, dist: &DistanceMatrix, capacity: usize, range: f64) -> Self {
        assert!(capacity >= 1);
        let nf = self.facilities.len();
        let mut arcs = vec![Vec::new(); nf];
        for (k, &a) in self.facilities.iter().enumerate() {
            for (j, &b) in self.facilities.iter().enumerate() {
                let d = dist.get(a, b);
                if j != k && d <= range + RANGE_EPS {
                    arcs[k].push((j, d));
                }
            }
        }
        self.level2 = Some(Level2 { capacity, arcs, min_super: self.min_open.div_ceil(capacity) });
        self
    }

    /// Every client still has a non-closed facility that could serve it.
    fn coverable(&self, fix: &[Fix]) -> bool {
        (0..self.clients.len()).all(|i| {
            self.client_fac[i].is_some_and(|j| fix[j] != Fix::Closed)
                || self.by_client[i].iter().any(|&(j, _)| fix[j] != Fix::Closed)
        })
    }

    /// Cheapest assignment for a fixed open set (local ids, ascending).
    /// Returns the serving facility of each client and the distance total.
    fn assign(&self, open: &[usize]) -> Option<(Vec<usize>, f64)> {
        let mut slot = vec![usize::MAX; self.facilities.len()];
        for (k, &j) in open.iter().enumerate() {
            slot[j] = k;
        }
        let mut fac_of = vec![usize::MAX; self.clients.len()];
        let mut rest = Vec::new();
        let mut arcs = Vec::new();
        for i in 0..self.clients.len() {
            match self.client_fac[i] {
                Some(j) if slot[j] != usize::MAX => fac_of[i] = j,
                _ => {
                    rest.push(i);
                    arcs.push(
                        self.by_client[i]
                            .iter()
                            .filter(|&&(j, _)| slot[j] != usize::MAX)
                            .map(|&(j, d)| (slot[j], d))
                            .collect::<Vec<_>>(),
                    );
                }
            }
        }
        let caps = vec![self.capacity - 1; open.len()];
        let (sol, total) = min_cost_assignment(&arcs, &caps)?;
        for (k, &i) in rest.iter().enumerate() {
            fac_of[i] = open[sol[k]];
        }
        Some((fac_of, total))
    }

    /// Starting multipliers: clients first, then one per facility when the
    /// second level is active.
    fn initial_mult(&self) -> Vec<f64> {
        let share = self.open_cost / self.capacity as f64;
        let mut mult: Vec<f64> = (0..self.clients.len())
            .map(|i| {
                let own = if self.client_fac[i].is_some() { 0.0 } else { f64::INFINITY };
                let near = self.by_client[i].iter().map(|&(_, d)| d).fold(own, f64::min);
                if near.is_finite() { near + share } else { share }
            })
            .collect();
        if let Some(l2) = &self.level2 {
            let share2 = self.open_cost / l2.capacity as f64;
            mult.extend(l2.arcs.iter().map(|a| {
                let near = a.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min);
                (near + share2).min(self.open_cost)
            }));
        }
        mult
    }

    /// Cheapest choice of facility states subject to the minimum number of
    /// open and super facilities.
    ///
    /// Some optimum dominates the per-facility cheapest states (raising a
    /// state never loses a count), so only upgrades from those states are
    /// searched, by dynamic programming over the capped count deficits.
    fn decide(&self, options: &[[f64; 3]]) -> Option<(Vec<u8>, f64)> {
        let m1 = self.min_open;
        let m2 = self.level2.as_ref().map_or(0, |l| l.min_super);
        let mut state = vec![CLOSED; options.len()];
        let (mut opened, mut supers, mut base_total) = (0, 0, 0.0);
        for (j, opt) in options.iter().enumerate() {
            let st = [CLOSED, OPEN, SUPER].into_iter().min_by(|&a, &b| opt[a as usize].total_cmp(&opt[b as usize])).unwrap();
            state[j] = st;
            base_total += opt[st as usize];
            opened += usize::from(st != CLOSED);
            supers += usize::from(st == SUPER);
        }
        if !base_total.is_finite() {
            return None;
        }
        let need_o = m1.saturating_sub(opened);
        let need_s = m2.saturating_sub(supers);
        if need_o == 0 && need_s == 0 {
            return Some((state, base_total));
        }
        let width = (need_o + 1) * (need_s + 1);
        let cell = |o: usize, s: usize| o * (need_s + 1) + s;
        // facilities with a finite upgrade, and the extra cost of each upgrade
        let mut movable: Vec<(usize, [f64; 3])> = Vec::new();
        for (j, opt) in options.iter().enumerate() {
            let from = state[j];
            let mut extra = [f64::INFINITY; 3];
            extra[from as usize] = 0.0;
            for st in (from + 1)..=SUPER {
                extra[st as usize] = opt[st as usize] - opt[from as usize];
            }
            if extra.iter().filter(|x| x.is_finite()).count() > 1 {
                movable.push((j, extra));
            }
        }
        let mut dp = vec![f64::INFINITY; width];
        dp[0] = 0.0;
        let mut back = vec![(0u32, CLOSED); movable.len() * width];
        let mut next = vec![f64::INFINITY; width];
        for (a, &(j, extra)) in movable.iter().enumerate() {
            let from = state[j];
            next.fill(f64::INFINITY);
            for o in 0..=need_o {
                for s in 0..=need_s {
                    let base = dp[cell(o, s)];
                    if !base.is_finite() {
                        continue;
                    }
                    for st in from..=SUPER {
                        let c = extra[st as usize];
                        if !c.is_finite() {
                            continue;
                        }
                        let o2 = (o + usize::from(from == CLOSED && st != CLOSED)).min(need_o);
                        let s2 = (s + usize::from(from != SUPER && st == SUPER)).min(need_s);
                        let t = cell(o2, s2);
                        if base + c < next[t] {
                            next[t] = base + c;
                            back[a * width + t] = (cell(o, s) as u32, st);
                        }
                    }
                }
            }
            std::mem::swap(&mut dp, &mut next);
        }
        let mut at = cell(need_o, need_s);
        let extra_total = dp[at];
        if !extra_total.is_finite() {
            return None;
        }
        for (a, &(j, _)) in movable.iter().enumerate().rev() {
            let (prev, st) = back[a * width + at];
            state[j] = st;
            at = prev as usize;
        }
        Some((state, base_total + extra_total))
    }

    fn eval(&self, mult: &[f64], fix: &[Fix], chosen: &mut [Vec<usize>], chosen2: &mut [Vec<usize>]) -> Option<Sub> {
        let nc = self.clients.len();
        let nf = self.facilities.len();
        let (lambda, mu) = mult.split_at(nc);
        let mut options = vec![[0.0, f64::INFINITY, f64::INFINITY]; nf];
        let mut buf: Vec<(f64, usize)> = Vec::new();
        for j in 0..nf {
            chosen[j].clear();
            chosen2[j].clear();
            if fix[j] == Fix::Closed {
                continue;
            }
            let mut v = self.open_cost - self.fac_client[j].map_or(0.0, |c| lambda[c]);
            buf.clear();
            for &(i, d) in &self.by_fac[j] {
                // a client whose own facility is forced open serves itself
                if self.client_fac[i].is_some_and(|k| fix[k] == Fix::Open) {
                    continue;
                }
                let r = d - lambda[i];
                if r < 0.0 {
                    buf.push((r, i));
                }
            }
            keep_best(&mut buf, self.capacity - 1);
            for &(r, i) in &buf {
                v += r;
                chosen[j].push(i);
            }
            let opt = &mut options[j];
            if fix[j] == Fix::Open {
                opt[0] = f64::INFINITY;
            }
            match &self.level2 {
                None => opt[1] = v,
                Some(l2) => {
                    opt[1] = v + mu[j];
                    let mut sup = v + self.open_cost;
                    buf.clear();
                    for &(k, d) in &l2.arcs[j] {
                        let r = d - mu[k];
                        if fix[k] != Fix::Closed && r < 0.0 {
                            buf.push((r, k));
                        }
                    }
                    keep_best(&mut buf, l2.capacity - 1);
                    for &(r, k) in &buf {
                        sup += r;
                        chosen2[j].push(k);
                    }
                    opt[2] = sup;
                }
            }
        }
        let (state, total) = self.decide(&options)?;
        let constant: f64 = lambda.iter().sum();
        let mut g = vec![1.0; nc];
        if self.level2.is_some() {
            g.extend(state.iter().map(|&st| if st == OPEN { 1.0 } else { 0.0 }));
        }
        for j in (0..nf).filter(|&j| state[j] != CLOSED) {
            if let Some(c) = self.fac_client[j] {
                g[c] -= 1.0;
            }
            for &i in &chosen[j] {
                g[i] -= 1.0;
            }
            if state[j] == SUPER {
                for &k in &chosen2[j] {
                    g[nc + k] -= 1.0;
                }
            }
        }
        Some(Sub { value: constant + total, state, options, g, constant })
    }

    /// Subgradient ascent on the multipliers. Returns the best bound and the
    /// relaxed solution attaining it; `mult` is left at the best point.
    fn lagrangian(&self, fix: &[Fix], mult: &mut Vec<f64>, cutoff: f64, iters: usize) -> Option<(f64, Sub)> {
        let nf = self.facilities.len();
        let mut chosen = vec![Vec::new(); nf];
        let mut chosen2 = vec![Vec::new(); nf];
        let mut theta = 2.0;
        let mut stall = 0;
        let mut best: Option<(f64, Sub, Vec<f64>)> = None;
        for _ in 0..iters {
            let sub = self.eval(mult, fix, &mut chosen, &mut chosen2)?;
            let improved = best.as_ref().is_none_or(|b| sub.value > b.0 + 1e-9);
            let norm: f64 = sub.g.iter().map(|x| x * x).sum();
            let value = sub.value;
            let g = sub.g.clone();
            if improved {
                best = Some((value, sub, mult.clone()));
                stall = 0;
            } else {
                stall += 1;
                if stall >= 4 {
                    theta *= 0.5;
                    stall = 0;
                }
            }
            let best_value = best.as_ref().unwrap().0;
            if best_value >= cutoff - EPS || norm < 1e-12 || theta < 1e-3 {
                break;
            }
            let target = if cutoff.is_finite() { cutoff } else { best_value.abs() * 1.05 + self.open_cost };
            let step = theta * (target - value).max(1e-6) / norm;
            for (l, gi) in mult.iter_mut().zip(&g) {
                *l += step * gi;
            }
        }
        let (value, sub, best_mult) = best?;
        *mult = best_mult;
        Some((value, sub))
    }

    /// Relaxed value with each facility forced open and forced closed in
    /// turn, reusing the state costs already computed (valid
    /// under-estimates). Prefix and suffix tables make each flip cost one
    /// pass over the count grid instead of a full re-solve.
    fn flip_values(&self, sub: &Sub) -> Vec<[f64; 2]> {
        let options = &sub.options;
        let nf = options.len();
        let m1 = self.min_open;
        let m2 = self.level2.as_ref().map_or(0, |l| l.min_super);
        let width = (m1 + 1) * (m2 + 1);
        let cell = |o: usize, s: usize| o * (m2 + 1) + s;
        let step = |o: usize, s: usize, st: u8| (o + usize::from(st != CLOSED), s + usize::from(st == SUPER));

        // prefix[j]: cheapest states for facilities before j, by capped counts reached
        let mut prefix = vec![f64::INFINITY; (nf + 1) * width];
        prefix[0] = 0.0;
        for (j, opt) in options.iter().enumerate() {
            let (done, rest) = prefix.split_at_mut((j + 1) * width);
            let (cur, next) = (&done[j * width..], &mut rest[..width]);
            for o in 0..=m1 {
                for s in 0..=m2 {
                    let base = cur[cell(o, s)];
                    if !base.is_finite() {
                        continue;
                    }
                    for st in [CLOSED, OPEN, SUPER] {
                        let (o2, s2) = step(o, s, st);
                        let t = cell(o2.min(m1), s2.min(m2));
                        next[t] = next[t].min(base + opt[st as usize]);
                    }
                }
            }
        }
        // suffix[j]: cheapest states for facilities from j on, by counts still required
        let mut suffix = vec![f64::INFINITY; (nf + 1) * width];
        suffix[nf * width] = 0.0;
        for j in (0..nf).rev() {
            let (head, tail) = suffix.split_at_mut((j + 1) * width);
            let (cur, later) = (&mut head[j * width..], &tail[..width]);
            for o in 0..=m1 {
                for s in 0..=m2 {
                    cur[cell(o, s)] = [CLOSED, OPEN, SUPER]
                        .into_iter()
                        .map(|st| {
                            let need = cell(o.saturating_sub(usize::from(st != CLOSED)), s.saturating_sub(usize::from(st == SUPER)));
                            options[j][st as usize] + later[need]
                        })
                        .fold(f64::INFINITY, f64::min);
                }
            }
        }
        (0..nf)
            .map(|j| {
                let before = &prefix[j * width..(j + 1) * width];
                let after = &suffix[(j + 1) * width..(j + 2) * width];
                let mut forced = [f64::INFINITY; 2];
                for o in 0..=m1 {
                    for s in 0..=m2 {
                        let base = before[cell(o, s)];
                        if !base.is_finite() {
                            continue;
                        }
                        for st in [CLOSED, OPEN, SUPER] {
                            let (o2, s2) = step(o, s, st);
                            let v = base + options[j][st as usize] + after[cell(m1.saturating_sub(o2), m2.saturating_sub(s2))];
                            let k = usize::from(st == CLOSED);
                            forced[k] = forced[k].min(v);
                        }
                    }
                }
                forced.map(|t| sub.constant + t)
            })
            .collect()
    }

    pub fn solve<S: SecondStage>(&self, stage: &mut S, limits: &Limits, warm: &[Vec<NodeId>]) -> CflOutcome<S::Plan> {
        self.solve_below(stage, limits, warm, f64::INFINITY)
    }

    /// As [`Cfl::solve`], looking only for solutions cheaper than `cutoff`.
    /// An exhausted search without a plan proves the optimum is at least
    /// `cutoff`.
    pub fn solve_below<S: SecondStage>(
        &self,
        stage: &mut S,
        limits: &Limits,
        warm: &[Vec<NodeId>],
        cutoff: f64,
    ) -> CflOutcome<S::Plan> {
        let nf = self.facilities.len();
        let mut search = Search { cfl: self, stage, ub: cutoff, best: None, seen: HashSet::new() };

        if self.clients.is_empty() {
            search.try_open(Vec::new());
            return CflOutcome { lower_bound: search.ub, best: search.best, exhausted: true, nodes: 0 };
        }
        let root_fix = vec![Fix::Free; nf];
        if !self.coverable(&root_fix) {
            return CflOutcome { best: None, exhausted: true, lower_bound: f64::INFINITY, nodes: 0 };
        }
        for w in warm {
            let local: Vec<usize> = w.iter().filter_map(|g| self.facilities.iter().position(|f| f == g)).collect();
            search.try_open(local);
        }

        let mut stack = vec![Node { fix: root_fix, mult: self.initial_mult(), bound: f64::NEG_INFINITY }];
        let mut nodes = 0u64;
        let mut frontier = f64::INFINITY;
        let mut exhausted = true;
        while let Some(mut node) = stack.pop() {
            if node.bound >= search.ub - EPS {
                continue;
            }
            if limits.hit(nodes) {
                exhausted = false;
                frontier = stack.iter().map(|n| n.bound).fold(node.bound, f64::min);
                break;
            }
            nodes += 1;
            if !self.coverable(&node.fix) {
                continue;
            }
            let iters = if nodes == 1 { ROOT_ITERS } else { NODE_ITERS };
            let Some((relaxed, sub)) = self.lagrangian(&node.fix, &mut node.mult, search.ub, iters) else {
                continue;
            };
            let bound = relaxed.max(node.bound);
            if bound >= search.ub - EPS {
                continue;
            }
            search.try_open((0..nf).filter(|&j| sub.state[j] != CLOSED).collect());
            if bound >= search.ub - EPS {
                continue;
            }

            // reduced-cost fixing
            let cutoff = search.ub - EPS;
            let mut fix = node.fix.clone();
            let mut dead = false;
            let flips = self.flip_values(&sub);
            for j in (0..nf).filter(|&j| node.fix[j] == Fix::Free) {
                let [if_open, if_closed] = flips[j].map(|v| v >= cutoff);
                match (if_open, if_closed) {
                    (true, true) => {
                        dead = true;
                        break;
                    }
                    (true, false) => fix[j] = Fix::Closed,
                    (false, true) => fix[j] = Fix::Open,
                    (false, false) => {}
                }
            }
            if dead {
                continue;
            }

            let free: Vec<usize> = (0..nf).filter(|&j| fix[j] == Fix::Free).collect();
            if free.is_empty() {
                if self.coverable(&fix) {
                    search.try_open((0..nf).filter(|&j| fix[j] == Fix::Open).collect());
                }
                continue;
            }
            let best_open = |j: usize| sub.options[j][1].min(sub.options[j][2]);
            let opened = free.iter().copied().filter(|&j| sub.state[j] != CLOSED);
            let (pick, open_first) = match opened.min_by(|&a, &b| best_open(a).total_cmp(&best_open(b))) {
                Some(j) => (j, true),
                None => (free.iter().copied().min_by(|&a, &b| best_open(a).total_cmp(&best_open(b))).unwrap(), false),
            };
            let child = |state: Fix| {
                let mut f = fix.clone();
                f[pick] = state;
                Node { fix: f, mult: node.mult.clone(), bound }
            };
            let (first, second) = if open_first { (Fix::Open, Fix::Closed) } else { (Fix::Closed, Fix::Open) };
            stack.push(child(second));
            stack.push(child(first));
        }
        let lower_bound = if exhausted { search.ub } else { frontier.min(search.ub) };
        CflOutcome { best: search.best, exhausted, lower_bound, nodes }
    }
}

struct Search<'a, S: SecondStage> {
    cfl: &'a Cfl,
    stage: &'a mut S,
    ub: f64,
    best: Option<CflPlan<S::Plan>>,
    seen: HashSet<Vec<usize>>,
}

impl<S: SecondStage> Search<'_, S> {
    /// Prices an open set (local ids, ascending) and keeps it if it improves
    /// the incumbent.
    fn try_open(&mut self, open: Vec<usize>) {
        if !self.seen.insert(open.clone()) {
            return;
        }
        let cfl = self.cfl;
        let Some((fac_of, dist_total)) = cfl.assign(&open) else {
            return;
        };
        let first = dist_total + cfl.open_cost * open.len() as f64;
        if first >= self.ub - EPS {
            return;
        }
        let open_global: Vec<NodeId> = open.iter().map(|&j| cfl.facilities[j]).collect();
        let Some((second_cost, second)) = self.stage.evaluate(&open_global, self.ub - first) else {
            return;
        };
        let total = first + second_cost;
        if total < self.ub - EPS {
            self.ub = total;
            let assignment =
                fac_of.iter().enumerate().map(|(i, &j)| (cfl.clients[i], cfl.facilities[j])).collect();
            self.best = Some(CflPlan { assignment, first_cost: first, second });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_distance_matrix, Point};
    use rand::{Rng, SeedableRng};

    /// Enumerates every open set and uses the flow for the assignment.
    fn enumerate(cfl: &Cfl) -> Option<f64> {
        let nf = cfl.facilities.len();
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << nf) {
            let open: Vec<usize> = (0..nf).filter(|&j| mask >> j & 1 == 1).collect();
            if let Some((_, d)) = cfl.assign(&open) {
                let c = d + cfl.open_cost * open.len() as f64;
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            }
        }
        best
    }

    #[test]
    fn matches_open_set_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for case in 0..60 {
            let n = rng.random_range(1..11);
            let side = rng.random_range(5.0..25.0);
            let pts: Vec<Point> =
                (0..n).map(|_| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side))).collect();
            let dist = build_distance_matrix(&pts);
            let facilities: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
            let cap = rng.random_range(1..5);
            let cfl = Cfl::new(&dist, (0..n).collect(), facilities, cap, 100.0, 10.0);
            let got = cfl.solve(&mut NoSecondStage, &Limits::default(), &[]);
            assert!(got.exhausted);
            let want = enumerate(&cfl);
            match (got.best.as_ref().map(|b| b.first_cost), want) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-6, "case {case}: {g} vs {w}"),
                (None, None) => {}
                other => panic!("case {case}: {other:?}"),
            }
        }
    }

    #[test]
    fn flip_tables_match_resolving() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let n = rng.random_range(2..30);
            let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.random_range(0.0..15.0), rng.random_range(0.0..15.0))).collect();
            let dist = build_distance_matrix(&pts);
            let cfl = Cfl::new(&dist, (0..n).collect(), (0..n).collect(), 3, 100.0, 10.0).with_level2(&dist, 2, 10.0);
            let options: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    let mut o = [0.0, rng.random_range(-50.0..50.0), rng.random_range(-50.0..150.0)];
                    if rng.random_bool(0.1) {
                        o[0] = f64::INFINITY;
                    }
                    o
                })
                .collect();
            let sub = Sub { value: 0.0, state: Vec::new(), options: options.clone(), g: Vec::new(), constant: 1.5 };
            let flips = cfl.flip_values(&sub);
            for j in 0..n {
                let mut open = options.clone();
                open[j][0] = f64::INFINITY;
                // closing is only tried on facilities that may close
                let mut closed = options.clone();
                closed[j] = [options[j][0], f64::INFINITY, f64::INFINITY];
                let want = [open, closed].map(|o| cfl.decide(&o).map_or(f64::INFINITY, |(_, t)| 1.5 + t));
                for k in 0..2 {
                    assert!(flips[j][k] == want[k] || (flips[j][k] - want[k]).abs() < 1e-9, "{j} {k}: {:?} {want:?}", flips[j]);
                }
            }
        }
    }

    #[test]
    fn node_limit_stops_search() {
        let pts: Vec<Point> = (0..30).map(|i| Point::new((i % 6) as f64 * 2.5, (i / 6) as f64 * 2.5)).collect();
        let dist = build_distance_matrix(&pts);
        let cfl = Cfl::new(&dist, (0..30).collect(), (0..30).collect(), 8, 100.0, 10.0);
        let limits = Limits { deadline: None, node_limit: Some(1) };
        let out = cfl.solve(&mut NoSecondStage, &limits, &[]);
        assert!(!out.exhausted || out.nodes <= 1);
        assert!(out.lower_bound <= out.best.as_ref().map_or(f64::INFINITY, |b| b.first_cost) + 1e-9);
    }
}
