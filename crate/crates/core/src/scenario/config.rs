//! Flat `key = value` configuration for experiment runs.
//!
//! Lines starting with `#` are comments. Unknown keys and malformed values
//! are errors. Every key and its default is listed by
//! [`ScenarioConfig::render`].

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exact::Budget;
use crate::interference::{FerConfig, FerMode, WifiInterferer};
use crate::metrics::{EnergyParams, TrafficParams};
use crate::model::{Area, BatteryLaw, ModelParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    S1SingleLevel,
    S2Bilevel,
    S3SizeSweep,
    CompareMethods,
    FerCurve,
    RuntimeBench,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        Self::S1SingleLevel,
        Self::S2Bilevel,
        Self::S3SizeSweep,
        Self::CompareMethods,
        Self::FerCurve,
        Self::RuntimeBench,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::S1SingleLevel => "s1_single_level",
            Self::S2Bilevel => "s2_bilevel",
            Self::S3SizeSweep => "s3_size_sweep",
            Self::CompareMethods => "compare_methods",
            Self::FerCurve => "fer_curve",
            Self::RuntimeBench => "runtime_bench",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMode {
    /// Square sized so that the node density is fixed.
    Density,
    /// The same rectangle for every N.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub n_values: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// Explicit topology seeds; when empty, repeat `r` uses `seed + r`.
    pub seeds: Vec<u64>,
    pub area_mode: AreaMode,
    pub density: f64,
    pub area_width: f64,
    pub area_height: f64,
    pub wifi_prob: f64,
    pub battery_lo: f64,
    pub battery_hi: f64,
    pub model: ModelParams,
    pub l2_sizes: Vec<usize>,
    pub force_promote_orphans: bool,
    pub exact: bool,
    pub exact_time_limit_s: f64,
    /// Branch-and-bound node cap; 0 means no cap.
    pub exact_node_limit: u64,
    pub energy: EnergyParams,
    pub traffic: TrafficParams,
    pub fer_mode: FerMode,
    pub fer_p_values: Vec<usize>,
    pub fer: FerConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::CompareMethods,
            n_values: (1..=8).map(|k| k * 100).collect(),
            repeats: 10,
            seed: 1,
            seeds: Vec::new(),
            area_mode: AreaMode::Density,
            density: 1.0,
            area_width: 50.0,
            area_height: 50.0,
            wifi_prob: 1.0,
            battery_lo: 0.0,
            battery_hi: 1.0,
            model: ModelParams::default(),
            l2_sizes: (1..=8).collect(),
            force_promote_orphans: true,
            exact: true,
            exact_time_limit_s: 600.0,
            exact_node_limit: 200,
            energy: EnergyParams::default(),
            traffic: TrafficParams::default(),
            fer_mode: FerMode::MonteCarlo,
            fer_p_values: (1..=8).collect(),
            fer: FerConfig::default(),
        }
    }
}

fn list<T: Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value for `{key}`: `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse(key, x.trim())).collect()
}

fn mode_str(m: FerMode) -> &'static str {
    match m {
        FerMode::MonteCarlo => "monte_carlo",
        FerMode::Analytic => "analytic",
        FerMode::ReferenceTable => "reference_table",
    }
}

impl ScenarioConfig {
    /// Topology seeds, one per repeat.
    pub fn topology_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.repeats as u64).map(|r| self.seed.wrapping_add(r)).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn area_for(&self, n: usize) -> Area {
        match self.area_mode {
            AreaMode::Density => Area::for_density(n, self.density),
            AreaMode::Fixed => Area::new(self.area_width, self.area_height),
        }
    }

    pub fn battery_law(&self) -> BatteryLaw {
        BatteryLaw::Uniform { lo: self.battery_lo, hi: self.battery_hi }
    }

    pub fn budget(&self) -> Budget {
        Budget {
            time_limit: std::time::Duration::from_secs_f64(self.exact_time_limit_s),
            node_limit: (self.exact_node_limit > 0).then_some(self.exact_node_limit),
        }
    }

    /// `(key, value, doc)` for every setting, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String, &'static str)> {
        let m = &self.model;
        let e = &self.energy;
        let t = &self.traffic;
        let f = &self.fer;
        let wifi = f.wifi_interferer.map_or("off".to_string(), |w| format!("{},{},{}", w.center, w.width, w.duty));
        vec![
            ("scenario", self.scenario.as_str().into(), "s1_single_level | s2_bilevel | s3_size_sweep | compare_methods | fer_curve | runtime_bench"),
            ("n_values", list(&self.n_values), "node counts to run"),
            ("repeats", self.repeats.to_string(), "topologies per node count"),
            ("seed", self.seed.to_string(), "base topology seed; repeat r uses seed + r"),
            ("seeds", list(&self.seeds), "explicit topology seeds, overriding seed and repeats"),
            ("area_mode", match self.area_mode { AreaMode::Density => "density", AreaMode::Fixed => "fixed" }.into(), "density | fixed"),
            ("density", self.density.to_string(), "nodes per square meter when area_mode = density"),
            ("area_width", self.area_width.to_string(), "meters, area_mode = fixed"),
            ("area_height", self.area_height.to_string(), "meters, area_mode = fixed"),
            ("wifi_prob", self.wifi_prob.to_string(), "probability a node has Wi-Fi"),
            ("battery_lo", self.battery_lo.to_string(), "battery drawn uniformly from [battery_lo, battery_hi]"),
            ("battery_hi", self.battery_hi.to_string(), ""),
            ("max_cluster_size_l1", m.max_cluster_size_l1.to_string(), "level-1 cluster size including the master"),
            ("max_cluster_size_l2", m.max_cluster_size_l2.to_string(), "level-2 cluster size including the super master"),
            ("bt_range_m", m.bt_range_m.to_string(), "Bluetooth range in meters"),
            ("fixed_cost", m.fixed_cost.to_string(), "objective cost per master and per super master"),
            ("battery_threshold", m.battery_threshold.to_string(), "minimum battery to lead a cluster"),
            ("l2_sizes", list(&self.l2_sizes), "level-2 sizes swept by s3_size_sweep"),
            ("force_promote_orphans", self.force_promote_orphans.to_string(), "heuristic promotes Wi-Fi orphans to singleton masters"),
            ("exact", self.exact.to_string(), "run the exact solver in compare_methods and runtime_bench"),
            ("exact_time_limit_s", self.exact_time_limit_s.to_string(), "wall-clock safety net per exact solve; the node limit normally stops first"),
            ("exact_node_limit", self.exact_node_limit.to_string(), "branch-and-bound node cap per solve, 0 = none; keeps runs reproducible"),
            ("e_wifi_report", e.e_wifi_report.to_string(), "J per Wi-Fi report"),
            ("e_bt_member", e.e_bt_member.to_string(), "J per Bluetooth hand-off, sender side"),
            ("e_bt_head_per_member", e.e_bt_head_per_member.to_string(), "J per Bluetooth hand-off, receiver side"),
            ("e_idle", e.e_idle.to_string(), "J per unattached node"),
            ("frame_len", t.frame_len.to_string(), "bytes per frame"),
            ("frame_rate", t.frame_rate.to_string(), "frames per second per node"),
            ("data_rate_kbps", t.data_rate_kbps.to_string(), "informational"),
            ("fer_mode", mode_str(self.fer_mode).into(), "monte_carlo | analytic | reference_table"),
            ("fer_p_values", list(&self.fer_p_values), "piconet counts for fer_curve"),
            ("fer_channels", f.channels.to_string(), "hop channels"),
            ("fer_slots_per_run", f.slots_per_run.to_string(), "slots per Monte Carlo run"),
            ("fer_runs", f.runs.to_string(), "Monte Carlo runs"),
            ("fer_piconet_duty", f.piconet_duty.to_string(), "per-slot activity of an interfering piconet"),
            ("fer_distance_min_m", f.distance_min_m.to_string(), "interferer distance law lower bound"),
            ("fer_distance_max_m", f.distance_max_m.to_string(), "interferer distance law upper bound"),
            ("fer_interference_radius_m", f.interference_radius_m.to_string(), "interferers beyond this are harmless"),
            ("fer_wifi", wifi, "off | center,width,duty"),
            ("fer_seed", f.seed.to_string(), "Monte Carlo seed"),
        ]
    }

    /// The config as a file, with comments.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v, doc) in self.entries() {
            if !doc.is_empty() {
                out.push_str(&format!("# {doc}\n"));
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "scenario" => self.scenario = v.parse()?,
            "n_values" => self.n_values = parse_list(key, v)?,
            "repeats" => self.repeats = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "area_mode" => {
                self.area_mode = match v {
                    "density" => AreaMode::Density,
                    "fixed" => AreaMode::Fixed,
                    _ => return Err(Error::Config(format!("bad value for `{key}`: `{v}`"))),
                }
            }
            "density" => self.density = parse(key, v)?,
            "area_width" => self.area_width = parse(key, v)?,
            "area_height" => self.area_height = parse(key, v)?,
            "wifi_prob" => self.wifi_prob = parse(key, v)?,
            "battery_lo" => self.battery_lo = parse(key, v)?,
            "battery_hi" => self.battery_hi = parse(key, v)?,
            "max_cluster_size_l1" => self.model.max_cluster_size_l1 = parse(key, v)?,
            "max_cluster_size_l2" => self.model.max_cluster_size_l2 = parse(key, v)?,
            "bt_range_m" => self.model.bt_range_m = parse(key, v)?,
            "fixed_cost" => self.model.fixed_cost = parse(key, v)?,
            "battery_threshold" => self.model.battery_threshold = parse(key, v)?,
            "l2_sizes" => self.l2_sizes = parse_list(key, v)?,
            "force_promote_orphans" => self.force_promote_orphans = parse(key, v)?,
            "exact" => self.exact = parse(key, v)?,
            "exact_time_limit_s" => self.exact_time_limit_s = parse(key, v)?,
            "exact_node_limit" => self.exact_node_limit = parse(key, v)?,
            "e_wifi_report" => self.energy.e_wifi_report = parse(key, v)?,
            "e_bt_member" => self.energy.e_bt_member = parse(key, v)?,
            "e_bt_head_per_member" => self.energy.e_bt_head_per_member = parse(key, v)?,
            "e_idle" => self.energy.e_idle = parse(key, v)?,
            "frame_len" => self.traffic.frame_len = parse(key, v)?,
            "frame_rate" => self.traffic.frame_rate = parse(key, v)?,
            "data_rate_kbps" => self.traffic.data_rate_kbps = parse(key, v)?,
            "fer_mode" => self.fer_mode = v.parse().map_err(|_| Error::Config(format!("bad value for `{key}`: `{v}`")))?,
            "fer_p_values" => self.fer_p_values = parse_list(key, v)?,
            "fer_channels" => self.fer.channels = parse(key, v)?,
            "fer_slots_per_run" => self.fer.slots_per_run = parse(key, v)?,
            "fer_runs" => self.fer.runs = parse(key, v)?,
            "fer_piconet_duty" => self.fer.piconet_duty = parse(key, v)?,
            "fer_distance_min_m" => self.fer.distance_min_m = parse(key, v)?,
            "fer_distance_max_m" => self.fer.distance_max_m = parse(key, v)?,
            "fer_interference_radius_m" => self.fer.interference_radius_m = parse(key, v)?,
            "fer_wifi" => {
                self.fer.wifi_interferer = if v == "off" {
                    None
                } else {
                    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                    let [c, w, d] = parts[..] else {
                        return Err(Error::Config(format!("`{key}` needs center,width,duty or off")));
                    };
                    Some(WifiInterferer { center: parse(key, c)?, width: parse(key, w)?, duty: parse(key, d)? })
                }
            }
            "fer_seed" => self.fer.seed = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", no + 1)));
            };
            self.set(k.trim(), v).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.repeats < 1 && self.seeds.is_empty() {
            return cfg("repeats must be at least 1".into());
        }
        if self.n_values.is_empty() && self.scenario != ScenarioKind::FerCurve {
            return cfg("n_values must not be empty".into());
        }
        if self.area_mode == AreaMode::Density && !(self.density.is_finite() && self.density > 0.0) {
            return cfg("density must be positive".into());
        }
        if self.area_mode == AreaMode::Fixed && !(self.area_width > 0.0 && self.area_height > 0.0) {
            return cfg("area dimensions must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.wifi_prob) {
            return cfg("wifi_prob must lie in [0, 1]".into());
        }
        if !(0.0 <= self.battery_lo && self.battery_lo <= self.battery_hi && self.battery_hi <= 1.0) {
            return cfg("battery range must satisfy 0 <= lo <= hi <= 1".into());
        }
        if self.scenario == ScenarioKind::S3SizeSweep && (self.l2_sizes.is_empty() || self.l2_sizes.contains(&0)) {
            return cfg("l2_sizes must be non-empty and positive".into());
        }
        if self.scenario == ScenarioKind::FerCurve && self.fer_p_values.is_empty() {
            return cfg("fer_p_values must not be empty".into());
        }
        if !(self.exact_time_limit_s.is_finite() && self.exact_time_limit_s > 0.0) {
            return cfg("exact_time_limit_s must be positive".into());
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.model.validate().map_err(wrap)?;
        self.energy.validate().map_err(wrap)?;
        self.traffic.validate().map_err(wrap)?;
        self.fer.validate().map_err(wrap)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parses_back_to_defaults() {
        let d = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::parse(&d.render()).unwrap(), d);
    }

    #[test]
    fn overrides_apply() {
        let c = ScenarioConfig::parse("scenario = s3_size_sweep\nn_values = 40\nseeds = 3, 9\nfer_wifi = 30,22,0.25\n").unwrap();
        assert_eq!(c.scenario, ScenarioKind::S3SizeSweep);
        assert_eq!(c.n_values, vec![40]);
        assert_eq!(c.topology_seeds(), vec![3, 9]);
        assert_eq!(c.fer.wifi_interferer, Some(WifiInterferer { center: 30, width: 22, duty: 0.25 }));
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for text in ["bogus = 1", "repeats = many", "no equals sign", "repeats = 0", "fer_wifi = 1,2", "density = -1"] {
            assert!(matches!(ScenarioConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn seeds_default_to_consecutive() {
        let c = ScenarioConfig { seed: 10, repeats: 3, ..Default::default() };
        assert_eq!(c.topology_seeds(), vec![10, 11, 12]);
    }
}
