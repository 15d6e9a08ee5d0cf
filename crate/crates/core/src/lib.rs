//! Two-level master/super-master clustering for dense Bluetooth scatternets.
//!
//! Nodes are grouped into first-level piconets (one master, up to seven
//! members) and the masters are grouped again under super masters, which are
//! the only nodes that report upstream over Wi-Fi. The crate provides:
//!
//! - [`model`]: node snapshots, seeded topology generation, the hierarchy
//!   representation and the constraint checker.
//! - [`heuristic`]: the greedy battery-ranked clustering pass at both levels.
//! - [`exact`]: a self-contained branch-and-bound solver for the integer
//!   program, plus an enumeration oracle for tiny instances.
//! - [`schedule`]: TDMA slot plans and the level-1/level-2 delay bounds.
//! - [`interference`]: frame-error-rate estimation for co-located piconets.
//! - [`metrics`]: energy, throughput and efficiency.
//! - [`scenario`]: the experiment runner and report emission used by the CLI.

pub mod error;
pub mod exact;
pub mod heuristic;
pub mod interference;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod schedule;

pub use error::{Error, Result};
pub use exact::{solve_bilevel, solve_bruteforce, solve_single_level, Budget, IlpSolution, SolveStatus};
pub use heuristic::{build_hierarchy, HeuristicOptions, HeuristicOutcome};
pub use interference::{FerConfig, FerCurve, FerEstimate};
pub use metrics::{EnergyParams, TrafficParams};
pub use scenario::{run_scenario, ScenarioConfig, ScenarioReport};
pub use schedule::{DelayReport, Micros, SlotPlan};
pub use model::{
    generate_topology, validate_hierarchy, Area, BatteryLaw, Hierarchy, ModelParams, NodeId, NodeSnapshot,
    Point, Role, Topology, ValidationReport,
};
