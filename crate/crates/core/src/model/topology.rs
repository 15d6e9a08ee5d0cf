use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NodeId, NodeSnapshot, Point};
use crate::error::{Error, Result};

/// Rectangular deployment area anchored at the origin, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    /// Square area holding `n` nodes at `density` nodes per square meter.
    pub fn for_density(n: usize, density: f64) -> Self {
        let side = (n.max(1) as f64 / density).sqrt();
        Self { width: side, height: side }
    }

    fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(Error::Parameter(format!(
                "area dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Distribution the generator draws battery fractions from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum BatteryLaw {
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl Default for BatteryLaw {
    fn default() -> Self {
        BatteryLaw::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl BatteryLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            BatteryLaw::Uniform { lo, hi } => (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi,
            BatteryLaw::Constant { value } => (0.0..=1.0).contains(&value),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("battery law outside [0,1]: {self:?}")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            BatteryLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            BatteryLaw::Constant { value } => value,
        }
    }
}

/// Symmetric pairwise distance matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

pub fn build_distance_matrix(positions: &[Point]) -> DistanceMatrix {
    let n = positions.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = positions[i].distance(&positions[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

/// A static snapshot of the node population with its distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    nodes: Vec<NodeSnapshot>,
    distances: DistanceMatrix,
    area: Area,
    seed: Option<u64>,
}

impl Topology {
    pub fn new(nodes: Vec<NodeSnapshot>, area: Area, seed: Option<u64>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::Structural(format!("node ids must be contiguous from 0: found {} at {i}", node.id)));
            }
            if !node.position.is_finite() {
                return Err(Error::Parameter(format!("node {i} has a non-finite position")));
            }
            if !(0.0..=1.0).contains(&node.battery) {
                return Err(Error::Parameter(format!("node {i} battery {} outside [0,1]", node.battery)));
            }
        }
        let positions: Vec<Point> = nodes.iter().map(|n| n.position).collect();
        let distances = build_distance_matrix(&positions);
        Ok(Self { nodes, distances, area, seed })
    }

    /// Builds a topology whose area is the bounding extent of the positions.
    pub fn from_nodes(nodes: Vec<NodeSnapshot>) -> Result<Self> {
        let width = nodes.iter().map(|n| n.position.x).fold(0.0, f64::max);
        let height = nodes.iter().map(|n| n.position.y).fold(0.0, f64::max);
        Self::new(nodes, Area::new(width, height), None)
    }

    pub fn nodes(&self) -> &[NodeSnapshot] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSnapshot {
        &self.nodes[id]
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    #[inline]
    pub fn dist(&self, i: NodeId, j: NodeId) -> f64 {
        self.distances.get(i, j)
    }

    pub fn area(&self) -> Area {
        self.area
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for n in &self.nodes {
            wtr.serialize(CsvRow {
                id: n.id,
                x: n.position.x,
                y: n.position.y,
                battery: n.battery,
                has_wifi: u8::from(n.has_wifi),
            })?;
        }
        if self.nodes.is_empty() {
            wtr.write_record(["id", "x", "y", "battery", "has_wifi"])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["id", "x", "y", "battery", "has_wifi"] {
            return Err(Error::Structural(format!("unexpected topology header: {headers:?}")));
        }
        let mut nodes = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            if row.has_wifi > 1 {
                return Err(Error::Structural(format!("has_wifi must be 0 or 1, got {}", row.has_wifi)));
            }
            nodes.push(NodeSnapshot::new(row.id, row.x, row.y, row.battery, row.has_wifi == 1));
        }
        Self::from_nodes(nodes)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: NodeId,
    x: f64,
    y: f64,
    battery: f64,
    has_wifi: u8,
}

/// Places `n` nodes uniformly at random in `area`.
///
/// Each node draws, in order, x, y, battery and the Wi-Fi flag from a
/// ChaCha8 stream seeded with `seed`, so the output is bit-identical across
/// runs and platforms.
pub fn generate_topology(n: usize, area: Area, wifi_prob: f64, battery_law: BatteryLaw, seed: u64) -> Result<Topology> {
    area.validate()?;
    battery_law.validate()?;
    if !(0.0..=1.0).contains(&wifi_prob) {
        return Err(Error::Parameter(format!("wifi_prob {wifi_prob} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n)
        .map(|id| {
            let x = rng.random::<f64>() * area.width;
            let y = rng.random::<f64>() * area.height;
            let battery = battery_law.sample(&mut rng);
            let has_wifi = rng.random_bool(wifi_prob);
            NodeSnapshot::new(id, x, y, battery, has_wifi)
        })
        .collect();
    Topology::new(nodes, area, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn empty_topology() {
        let t = generate_topology(0, Area::new(50.0, 50.0), 1.0, BatteryLaw::default(), 3).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.distances().len(), 0);
    }

    #[test]
    fn same_seed_same_nodes() {
        let a = generate_topology(40, Area::new(50.0, 50.0), 0.7, BatteryLaw::default(), 11).unwrap();
        let b = generate_topology(40, Area::new(50.0, 50.0), 0.7, BatteryLaw::default(), 11).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(40, Area::new(50.0, 50.0), 0.7, BatteryLaw::default(), 12).unwrap();
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn hundred_nodes_in_area_symmetric_matrix() {
        let t = generate_topology(100, Area::new(50.0, 50.0), 1.0, BatteryLaw::default(), 7).unwrap();
        assert_eq!(t.len(), 100);
        for n in t.nodes() {
            assert!((0.0..=50.0).contains(&n.position.x) && (0.0..=50.0).contains(&n.position.y));
        }
        for i in 0..100 {
            assert_eq!(t.dist(i, i), 0.0);
            for j in 0..100 {
                assert_eq!(t.dist(i, j), t.dist(j, i));
                assert!(t.dist(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn non_positive_area_is_parameter_error() {
        let e = generate_topology(5, Area::new(0.0, 10.0), 1.0, BatteryLaw::default(), 1);
        assert!(matches!(e, Err(Error::Parameter(_))));
        let e = generate_topology(5, Area::new(10.0, -1.0), 1.0, BatteryLaw::default(), 1);
        assert!(matches!(e, Err(Error::Parameter(_))));
    }

    #[test]
    fn wifi_prob_and_battery_laws_respected() {
        let t = generate_topology(50, Area::new(10.0, 10.0), 0.0, BatteryLaw::Constant { value: 0.25 }, 5).unwrap();
        assert!(t.nodes().iter().all(|n| !n.has_wifi && n.battery == 0.25));
        let t = generate_topology(50, Area::new(10.0, 10.0), 1.0, BatteryLaw::Uniform { lo: 0.6, hi: 0.9 }, 5).unwrap();
        assert!(t.nodes().iter().all(|n| n.has_wifi && (0.6..=0.9).contains(&n.battery)));
        assert!(generate_topology(1, Area::new(1.0, 1.0), 1.5, BatteryLaw::default(), 0).is_err());
    }

    #[test]
    fn three_four_five() {
        let m = build_distance_matrix(&[Point::new(0.0, 0.0), Point::new(3.0, 4.0)]);
        assert_eq!(m.to_rows(), vec![vec![0.0, 5.0], vec![5.0, 0.0]]);
        assert_eq!(build_distance_matrix(&[Point::new(2.0, 2.0)]).to_rows(), vec![vec![0.0]]);
    }

    #[test]
    fn matrix_matches_naive_double_loop() {
        let pts = [(1.5, 2.0), (7.25, -3.0), (0.0, 0.0), (12.0, 9.5), (-4.0, 6.0)];
        let positions: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let m = build_distance_matrix(&positions);
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                let naive = ((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).sqrt();
                assert!((m.get(i, j) - naive).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_contiguous_ids_rejected() {
        let nodes = vec![NodeSnapshot::new(0, 0.0, 0.0, 0.5, true), NodeSnapshot::new(2, 1.0, 0.0, 0.5, true)];
        assert!(matches!(Topology::from_nodes(nodes), Err(Error::Structural(_))));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let t = generate_topology(30, Area::new(50.0, 50.0), 0.5, BatteryLaw::default(), 99).unwrap();
        let text = t.to_csv_string();
        assert!(text.starts_with("id,x,y,battery,has_wifi\n"));
        let back = Topology::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.nodes(), t.nodes());
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn empty_csv_has_header() {
        let t = Topology::from_nodes(vec![]).unwrap();
        assert_eq!(t.to_csv_string(), "id,x,y,battery,has_wifi\n");
        assert!(Topology::read_csv(t.to_csv_string().as_bytes()).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn distance_matrix_is_permutation_equivariant(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..12),
            seed in any::<u64>(),
        ) {
            let positions: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let n = positions.len();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<Point> = perm.iter().map(|&k| positions[k]).collect();
            let m = build_distance_matrix(&positions);
            let mp = build_distance_matrix(&permuted);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(mp.get(i, j), m.get(perm[i], perm[j]));
                }
            }
        }
    }
}
