//! Domain types shared by every other module: nodes, topologies, model
//! parameters, the two-level hierarchy and its constraint checker.

mod hierarchy;
mod topology;
mod validate;

pub use hierarchy::{price_hierarchy, Hierarchy, ObjectiveBreakdown, Role};
pub use topology::{build_distance_matrix, generate_topology, Area, BatteryLaw, DistanceMatrix, Topology};
pub use validate::{
    validate_hierarchy, validate_hierarchy_excluding, validate_level1, Constraint, ValidationReport, Violation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Tolerance applied to range checks so that a node sitting exactly on the
/// Bluetooth range boundary is not rejected by rounding noise.
pub const RANGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One device at the time the hierarchy is formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub id: NodeId,
    pub position: Point,
    /// Remaining battery as a fraction in `[0, 1]`.
    pub battery: f64,
    pub has_wifi: bool,
}

impl NodeSnapshot {
    pub fn new(id: NodeId, x: f64, y: f64, battery: f64, has_wifi: bool) -> Self {
        Self { id, position: Point::new(x, y), battery, has_wifi }
    }

    /// Binary battery flag: true when the battery is at or above `threshold`.
    pub fn battery_ok(&self, threshold: f64) -> bool {
        self.battery >= threshold
    }

    /// Whether the node may act as a (first- or second-level) head.
    pub fn can_lead(&self, p: &ModelParams) -> bool {
        self.has_wifi && self.battery_ok(p.battery_threshold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// First-level cluster cardinality bound, master included.
    pub max_cluster_size_l1: usize,
    /// Second-level cluster cardinality bound, super master included.
    pub max_cluster_size_l2: usize,
    pub bt_range_m: f64,
    /// Fixed cost charged per master and again per super master.
    pub fixed_cost: f64,
    pub battery_threshold: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            max_cluster_size_l1: 8,
            max_cluster_size_l2: 8,
            bt_range_m: 10.0,
            fixed_cost: 100.0,
            battery_threshold: 0.5,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_cluster_size_l1 < 1 || self.max_cluster_size_l2 < 1 {
            return Err(Error::Parameter("cluster size bounds must be at least 1".into()));
        }
        for (name, v) in [
            ("bt_range_m", self.bt_range_m),
            ("fixed_cost", self.fixed_cost),
            ("battery_threshold", self.battery_threshold),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn in_range(&self, d: f64) -> bool {
        d <= self.bt_range_m + RANGE_EPS
    }
}
