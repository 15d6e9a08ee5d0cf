//! Min-cost capacitated assignment by successive shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Min-heap entry keyed on distance.
struct Entry(f64, usize);

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Assigns every client to one facility, minimizing total cost.
///
/// `arcs[i]` lists `(facility, cost)` pairs client `i` may use and
/// `capacity[f]` bounds how many clients facility `f` accepts. Returns the
/// facility of each client and the total cost, or `None` when no complete
/// assignment exists.
pub(crate) fn min_cost_assignment(arcs: &[Vec<(usize, f64)>], capacity: &[usize]) -> Option<(Vec<usize>, f64)> {
    let nc = arcs.len();
    let nf = capacity.len();
    if nc == 0 {
        return Some((Vec::new(), 0.0));
    }
    if capacity.iter().sum::<usize>() < nc {
        return None;
    }
    // node layout: clients 0..nc, facilities nc..nc+nf, sink nc+nf
    let sink = nc + nf;
    let nv = sink + 1;
    let mut assigned: Vec<Option<usize>> = vec![None; nc];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nf];
    let mut potential = vec![0.0f64; nv];
    let mut dist = vec![f64::INFINITY; nv];
    let mut prev = vec![usize::MAX; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();

    let cost_of = |i: usize, f: usize| arcs[i].iter().find(|&&(g, _)| g == f).map(|&(_, c)| c).unwrap();

    for s in 0..nc {
        if arcs[s].is_empty() {
            return None;
        }
        // a fresh client has no incoming residual arcs, so any potential
        // making its outgoing reduced costs non-negative is valid
        potential[s] = arcs[s].iter().map(|&(f, c)| potential[nc + f] - c).fold(f64::NEG_INFINITY, f64::max);

        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[s] = 0.0;
        heap.clear();
        heap.push(Entry(0.0, s));
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            if u == sink {
                break;
            }
            done[u] = true;
            let mut relax = |v: usize, c: f64| {
                let reduced = c + potential[u] - potential[v];
                let nd = dist[u] + reduced.max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Entry(nd, v));
                }
            };
            if u < nc {
                for &(f, c) in &arcs[u] {
                    if assigned[u] != Some(f) {
                        relax(nc + f, c);
                    }
                }
            } else {
                let f = u - nc;
                for &i in &members[f] {
                    relax(i, -cost_of(i, f));
                }
                if members[f].len() < capacity[f] {
                    relax(sink, 0.0);
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        // only settled nodes keep their distance; the rest are at least `reach` away
        let reach = dist[sink];
        for v in 0..nv {
            potential[v] += if done[v] { dist[v].min(reach) } else { reach };
        }
        // walk back from the sink: facility <- client <- old facility <- ...
        let mut v = prev[sink];
        loop {
            let f = v - nc;
            let i = prev[v];
            if let Some(old) = assigned[i] {
                members[old].retain(|&m| m != i);
            }
            assigned[i] = Some(f);
            members[f].push(i);
            if i == s {
                break;
            }
            v = prev[i];
        }
    }
    let assignment: Vec<usize> = assigned.into_iter().map(|a| a.unwrap()).collect();
    let total = assignment.iter().enumerate().map(|(i, &f)| cost_of(i, f)).sum();
    Some((assignment, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive reference for small instances.
    fn brute(arcs: &[Vec<(usize, f64)>], capacity: &[usize]) -> Option<f64> {
        fn rec(i: usize, arcs: &[Vec<(usize, f64)>], load: &mut Vec<usize>, cap: &[usize], acc: f64, best: &mut Option<f64>) {
            if i == arcs.len() {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for &(f, c) in &arcs[i] {
                if load[f] < cap[f] {
                    load[f] += 1;
                    rec(i + 1, arcs, load, cap, acc + c, best);
                    load[f] -= 1;
                }
            }
        }
        let mut best = None;
        rec(0, arcs, &mut vec![0; capacity.len()], capacity, 0.0, &mut best);
        best
    }

    #[test]
    fn displacement_chain_is_found() {
        // client 0 prefers f0, client 1 only fits f0; optimum pushes 0 to f1
        let arcs = vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 1.0)]];
        let (a, c) = min_cost_assignment(&arcs, &[1, 1]).unwrap();
        assert_eq!(a, vec![1, 0]);
        assert_eq!(c, 3.0);
    }

    #[test]
    fn infeasible_when_capacity_short() {
        let arcs = vec![vec![(0, 1.0)], vec![(0, 1.0)]];
        assert!(min_cost_assignment(&arcs, &[1]).is_none());
        assert!(min_cost_assignment(&[vec![]], &[3]).is_none());
    }

    #[test]
    fn matches_enumeration_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let nc = rng.random_range(1..7);
            let nf = rng.random_range(1..4);
            let capacity: Vec<usize> = (0..nf).map(|_| rng.random_range(0..4)).collect();
            let arcs: Vec<Vec<(usize, f64)>> = (0..nc)
                .map(|_| {
                    let mut row = Vec::new();
                    for f in 0..nf {
                        if rng.random_bool(0.7) {
                            row.push((f, rng.random_range(0.0..10.0)));
                        }
                    }
                    row
                })
                .collect();
            let got = min_cost_assignment(&arcs, &capacity).map(|(_, c)| c);
            let want = brute(&arcs, &capacity);
            match (got, want) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-9, "{g} vs {w} on {arcs:?} {capacity:?}"),
                (None, None) => {}
                other => panic!("mismatch {other:?} on {arcs:?} {capacity:?}"),
            }
        }
    }
}
