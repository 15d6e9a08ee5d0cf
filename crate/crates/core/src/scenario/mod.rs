//! Experiment runner. Every `(n, seed)` pair gets one topology that all
//! methods share, so comparisons are paired.

mod config;
mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{AreaMode, ScenarioConfig, ScenarioKind};
pub use report::{aggregate, load_report, Aggregate, Method, OutputFormat, Record, ScenarioReport, Stat, Timing};

use crate::exact::{solve_bilevel, solve_single_level, SolveStatus};
use crate::heuristic::{build_hierarchy_with, HeuristicOptions};
use crate::interference::FerCurve;
use crate::metrics::{effective_throughput, energy_direct, total_energy, total_energy_single_level, Approach};
use crate::model::{generate_topology, price_hierarchy, Hierarchy, ModelParams, Topology};
use crate::schedule::{d1_max, total_delay_bilevel, T};
use crate::Result;

/// A clustering before metrics are attached.
struct Cell {
    n: usize,
    seed: u64,
    method: Method,
    l2_size: usize,
    status: String,
    hierarchy: Option<Hierarchy>,
    orphans: usize,
    objective: Option<f64>,
    lower_bound: Option<f64>,
    gap: Option<f64>,
    seconds: Option<f64>,
}

impl Cell {
    fn new(n: usize, seed: u64, method: Method, l2_size: usize) -> Self {
        Self {
            n,
            seed,
            method,
            l2_size,
            status: "ok".into(),
            hierarchy: None,
            orphans: 0,
            objective: None,
            lower_bound: None,
            gap: None,
            seconds: None,
        }
    }

    fn piconets(&self) -> usize {
        match (&self.hierarchy, self.method.approach()) {
            (Some(h), Approach::SingleLevel) => h.masters().len(),
            (Some(h), Approach::Bilevel) => h.super_masters().len(),
            _ => 0,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn methods(cfg: &ScenarioConfig) -> Vec<Method> {
    use Method::*;
    match cfg.scenario {
        ScenarioKind::S1SingleLevel => vec![ExactSingle],
        ScenarioKind::S2Bilevel => vec![Heuristic, ExactBilevel, Direct],
        ScenarioKind::S3SizeSweep => vec![ExactBilevel],
        ScenarioKind::CompareMethods if cfg.exact => vec![Heuristic, HeuristicSingle, ExactBilevel, Direct],
        ScenarioKind::CompareMethods => vec![Heuristic, HeuristicSingle, Direct],
        ScenarioKind::RuntimeBench if cfg.exact => vec![Heuristic, ExactBilevel],
        ScenarioKind::RuntimeBench => vec![Heuristic],
        ScenarioKind::FerCurve => Vec::new(),
    }
}

fn cluster_one(cfg: &ScenarioConfig, topo: &Topology, p: &ModelParams, seed: u64, methods: &[Method]) -> Result<Vec<Cell>> {
    let n = topo.len();
    let l2 = p.max_cluster_size_l2;
    let mut cells = Vec::new();
    // both heuristic methods price the same clustering
    let heuristic = methods.iter().any(|m| matches!(m, Method::Heuristic | Method::HeuristicSingle)).then(|| {
        let started = Instant::now();
        let out = build_hierarchy_with(topo, p, HeuristicOptions { force_promote_orphans: cfg.force_promote_orphans });
        (out, started.elapsed().as_secs_f64())
    });
    for &m in methods {
        let mut cell = Cell::new(n, seed, m, l2);
        match m {
            Method::Heuristic | Method::HeuristicSingle => {
                let (out, secs) = heuristic.as_ref().expect("computed above");
                let mut h = out.hierarchy.clone();
                if m == Method::HeuristicSingle {
                    h.l2_master_of.iter_mut().for_each(|s| *s = None);
                } else {
                    cell.seconds = Some(*secs);
                }
                cell.objective = Some(price_hierarchy(topo, &h, p).total());
                cell.orphans = out.orphans.len();
                cell.hierarchy = Some(h);
            }
            Method::ExactSingle | Method::ExactBilevel => {
                let sol = if m == Method::ExactSingle {
                    solve_single_level(topo, p, cfg.budget())?
                } else {
                    solve_bilevel(topo, p, cfg.budget())?
                };
                cell.status = match sol.status {
                    SolveStatus::Optimal => "optimal",
                    SolveStatus::Timeout => "timeout",
                    SolveStatus::Infeasible => "infeasible",
                }
                .into();
                cell.seconds = Some(sol.elapsed);
                if sol.objective.is_finite() {
                    cell.objective = Some(sol.objective);
                    cell.lower_bound = finite(sol.lower_bound);
                    cell.gap = finite(sol.gap);
                    cell.orphans = sol.hierarchy.unassigned().len();
                    cell.hierarchy = Some(sol.hierarchy);
                }
            }
            Method::Direct => {}
        }
        cells.push(cell);
    }
    Ok(cells)
}

fn cluster_all(cfg: &ScenarioConfig) -> Result<Vec<Cell>> {
    let methods = methods(cfg);
    if methods.is_empty() {
        return Ok(Vec::new());
    }
    let seeds = cfg.topology_seeds();
    let jobs: Vec<(usize, u64)> = cfg.n_values.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let run = |&(n, seed): &(usize, u64)| -> Result<Vec<Cell>> {
        let topo = generate_topology(n, cfg.area_for(n), cfg.wifi_prob, cfg.battery_law(), seed)?;
        if cfg.scenario == ScenarioKind::S3SizeSweep {
            let mut cells = Vec::new();
            for &l2 in &cfg.l2_sizes {
                let p = ModelParams { max_cluster_size_l2: l2, ..cfg.model.clone() };
                cells.extend(cluster_one(cfg, &topo, &p, seed, &methods)?);
            }
            Ok(cells)
        } else {
            cluster_one(cfg, &topo, &cfg.model, seed, &methods)
        }
    };
    // timing runs share no cores so wall-clock numbers stay comparable
    let per_job: Vec<Result<Vec<Cell>>> = if cfg.scenario == ScenarioKind::RuntimeBench {
        jobs.iter().map(run).collect()
    } else {
        jobs.par_iter().map(run).collect()
    };
    let mut cells = Vec::new();
    for r in per_job {
        cells.extend(r?);
    }
    Ok(cells)
}

/// FER at every piconet count in `ps`, one independent estimate per count.
fn fer_curve(cfg: &ScenarioConfig, ps: &BTreeSet<usize>) -> Result<FerCurve> {
    let points: Vec<Result<FerCurve>> =
        ps.par_iter().map(|&p| FerCurve::compute(cfg.fer_mode, &[p], &cfg.fer)).collect();
    let mut curve = FerCurve { mode: cfg.fer_mode, points: Default::default() };
    for c in points {
        curve.points.extend(c?.points);
    }
    for e in curve.points.values_mut() {
        e.per_run_master = Vec::new();
        e.per_run_slave = Vec::new();
    }
    Ok(curve)
}

fn measure(cfg: &ScenarioConfig, cell: Cell, curve: &FerCurve) -> Result<(Record, Option<Timing>)> {
    let approach = cell.method.approach();
    let mut rec = Record {
        n: cell.n,
        seed: cell.seed,
        method: cell.method,
        l2_size: cell.l2_size,
        status: cell.status,
        masters: 0,
        super_masters: 0,
        orphans: cell.orphans,
        objective: cell.objective,
        lower_bound: cell.lower_bound,
        gap: cell.gap,
        d1_max_us: None,
        td2_us: None,
        te: None,
        g: None,
        ef: None,
    };
    let timing = cell.seconds.map(|seconds| Timing { n: cell.n, seed: cell.seed, method: cell.method, l2_size: cell.l2_size, seconds });
    let te = match (&cell.hierarchy, approach) {
        (_, Approach::Direct) => energy_direct(cell.n, &cfg.energy),
        (None, _) => return Ok((rec, timing)),
        (Some(h), Approach::SingleLevel) => total_energy_single_level(h, &cfg.energy),
        (Some(h), Approach::Bilevel) => total_energy(h, &cfg.energy),
    };
    let g = match &cell.hierarchy {
        Some(h) => effective_throughput(h, &cfg.traffic, curve, approach)?,
        None => effective_throughput(&Hierarchy::empty(cell.n), &cfg.traffic, curve, Approach::Direct)?,
    };
    if let Some(h) = &cell.hierarchy {
        rec.masters = h.masters().len();
        let sizes: Vec<usize> = h.l1_clusters().values().map(Vec::len).collect();
        rec.d1_max_us = Some(if sizes.is_empty() { 0 } else { d1_max(&sizes, T)?.0 });
        if approach == Approach::Bilevel {
            rec.super_masters = h.super_masters().len();
            rec.td2_us = Some(total_delay_bilevel(h, T)?.td2.0);
        }
    }
    rec.te = Some(te);
    rec.g = Some(g);
    // an empty network delivers nothing and spends nothing
    rec.ef = Some(if te == 0.0 { 0.0 } else { g / te });
    Ok((rec, timing))
}

/// Runs every cell of `cfg` and assembles the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let cells = cluster_all(cfg)?;
    let ps: BTreeSet<usize> = if cfg.scenario == ScenarioKind::FerCurve {
        cfg.fer_p_values.iter().copied().collect()
    } else {
        cells.iter().map(Cell::piconets).filter(|&p| p > 0).collect()
    };
    let curve = fer_curve(cfg, &ps)?;
    let mut records = Vec::with_capacity(cells.len());
    let mut timings = Vec::new();
    for cell in cells {
        let (rec, timing) = measure(cfg, cell, &curve)?;
        records.push(rec);
        timings.extend(timing);
    }
    let fer_curve = (cfg.scenario == ScenarioKind::FerCurve || !curve.points.is_empty()).then_some(curve);
    Ok(ScenarioReport { config: cfg.clone(), aggregates: aggregate(&records), records, fer_curve, timings })
}
