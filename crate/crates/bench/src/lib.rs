//! Shared fixtures for the criterion benches.

use scatternet_core::model::{generate_topology, Area, BatteryLaw, Topology};

/// Uniform placement at one node per square metre, everyone on Wi-Fi.
pub fn topology(n: usize, seed: u64) -> Topology {
    let battery = BatteryLaw::Uniform { lo: 0.0, hi: 1.0 };
    generate_topology(n, Area::for_density(n, 1.0), 1.0, battery, seed).expect("valid topology parameters")
}
