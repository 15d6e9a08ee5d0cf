use scatternet_core::exact::solve_bruteforce_single_level;
use scatternet_core::model::{price_hierarchy, validate_hierarchy, validate_level1};
use scatternet_core::{
    build_hierarchy, generate_topology, solve_bilevel, solve_bruteforce, solve_single_level, Area, BatteryLaw, Budget,
    ModelParams, SolveStatus,
};

fn budget() -> Budget {
    Budget::seconds(60.0)
}

#[test]
fn bilevel_matches_bruteforce_on_small_instances() {
    let p = ModelParams::default();
    let mut feasible = 0;
    for seed in 0..40u64 {
        let n = 2 + (seed as usize % 7);
        let t = generate_topology(n, Area::new(15.0, 15.0), 0.8, BatteryLaw::default(), seed).unwrap();
        let exact = solve_bilevel(&t, &p, budget()).unwrap();
        let oracle = solve_bruteforce(&t, &p).unwrap();
        assert_eq!(exact.status, oracle.status, "seed {seed}");
        if oracle.status == SolveStatus::Optimal {
            feasible += 1;
            assert!((exact.objective - oracle.objective).abs() < 1e-9, "seed {seed}: {} vs {}", exact.objective, oracle.objective);
            assert!(validate_hierarchy(&t, &exact.hierarchy, &p).unwrap().feasible);
        }
    }
    assert!(feasible >= 20);
}

#[test]
fn single_level_matches_bruteforce_with_tight_capacity() {
    for seed in 0..30u64 {
        let p = ModelParams { max_cluster_size_l1: 1 + seed as usize % 4, max_cluster_size_l2: 1 + seed as usize % 3, ..Default::default() };
        let t = generate_topology(9, Area::new(12.0, 12.0), 0.9, BatteryLaw::Uniform { lo: 0.3, hi: 1.0 }, seed).unwrap();
        let a = solve_single_level(&t, &p, budget()).unwrap();
        let b = solve_bruteforce_single_level(&t, &p).unwrap();
        assert_eq!(a.status, b.status, "seed {seed}");
        if b.status == SolveStatus::Optimal {
            assert!((a.objective - b.objective).abs() < 1e-9, "seed {seed}");
            assert!(validate_level1(&t, &a.hierarchy, &p).unwrap().feasible);
        }
        let c = solve_bilevel(&t, &p, budget()).unwrap();
        let d = solve_bruteforce(&t, &p).unwrap();
        if d.status == SolveStatus::Optimal {
            assert!((c.objective - d.objective).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn exact_never_worse_than_heuristic() {
    let p = ModelParams::default();
    for seed in 0..15u64 {
        let t = generate_topology(40, Area::for_density(40, 1.0), 1.0, BatteryLaw::Uniform { lo: 0.5, hi: 1.0 }, seed).unwrap();
        let h = build_hierarchy(&t, &p);
        let s = solve_bilevel(&t, &p, budget()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        if h.orphans.is_empty() {
            assert!(s.objective <= price_hierarchy(&t, &h.hierarchy, &p).total() + 1e-9);
        }
        let single = solve_single_level(&t, &p, budget()).unwrap();
        assert!(single.objective <= s.level1_cost + 1e-9);
    }
}

#[test]
fn level2_cluster_count_non_increasing_in_capacity() {
    let t = generate_topology(30, Area::for_density(30, 1.0), 1.0, BatteryLaw::Uniform { lo: 0.5, hi: 1.0 }, 7).unwrap();
    let mut prev = usize::MAX;
    for cap in 1..=8 {
        let p = ModelParams { max_cluster_size_l2: cap, ..Default::default() };
        let s = solve_bilevel(&t, &p, budget()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let k = s.super_masters().len();
        assert!(k <= prev, "cap {cap}: {k} > {prev}");
        prev = k;
    }
}
