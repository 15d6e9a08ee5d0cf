//! Frame error rates for co-located piconets that hop over a shared band.
//!
//! Each piconet retunes to a uniformly random channel every slot. In a
//! poll/response cycle the master transmits in the even slot and the slave
//! answers in the odd one. A frame is lost when an active interferer within
//! the interference radius sits on the same channel. A slave only answers
//! a poll it received, so the master loses a response either because the
//! poll or the response collided; that is why the master-side rate is the
//! higher one.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

pub const BT_CHANNELS: usize = 79;

/// Fraction of slots an interfering piconet transmits in. Chosen so the
/// expected slave-side rate for two piconets equals the measured 0.0068:
/// with one interferer that rate is `duty / channels`, so
/// `duty = 0.0068 * 79`.
pub const FITTED_PICONET_DUTY: f64 = 0.0068 * BT_CHANNELS as f64;

/// A Wi-Fi transmitter occupying a contiguous block of hop channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WifiInterferer {
    pub center: usize,
    pub width: usize,
    /// Fraction of slots the block is on air.
    pub duty: f64,
}

impl Default for WifiInterferer {
    fn default() -> Self {
        Self { center: 39, width: 22, duty: 0.5 }
    }
}

impl WifiInterferer {
    /// Covered channel range `[lo, hi)` within `channels`.
    fn band(&self, channels: usize) -> (usize, usize) {
        let lo = self.center.saturating_sub(self.width / 2);
        (lo, (lo + self.width).min(channels))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerConfig {
    pub piconets: usize,
    pub channels: usize,
    /// Slots simulated per run; every two slots make one poll/response cycle.
    pub slots_per_run: u64,
    pub runs: usize,
    pub wifi_interferer: Option<WifiInterferer>,
    /// Interferer distances are drawn uniformly from this range once per run.
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    /// Interferers farther than this never corrupt a frame.
    pub interference_radius_m: f64,
    /// Per-slot activity probability of each interfering piconet.
    pub piconet_duty: f64,
    pub seed: u64,
}

impl Default for FerConfig {
    fn default() -> Self {
        Self {
            piconets: 2,
            channels: BT_CHANNELS,
            slots_per_run: 20_000,
            runs: 20,
            wifi_interferer: None,
            distance_min_m: 0.1,
            distance_max_m: 10.0,
            interference_radius_m: 10.0,
            piconet_duty: FITTED_PICONET_DUTY,
            seed: 0,
        }
    }
}

impl FerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if self.piconets < 1 {
            return bad("piconets must be at least 1");
        }
        if self.channels < 1 {
            return bad("channels must be at least 1");
        }
        if self.runs < 1 {
            return bad("runs must be at least 1");
        }
        if self.slots_per_run < 2 {
            return bad("slots_per_run must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.piconet_duty) {
            return bad("piconet_duty must lie in [0, 1]");
        }
        if !(self.distance_min_m >= 0.0 && self.distance_min_m <= self.distance_max_m && self.distance_max_m.is_finite()) {
            return bad("distance range must satisfy 0 <= min <= max < inf");
        }
        if self.interference_radius_m.is_nan() || self.interference_radius_m < 0.0 {
            return bad("interference_radius_m must be >= 0");
        }
        if let Some(w) = &self.wifi_interferer {
            if w.width < 1 || w.center >= self.channels || !(0.0..=1.0).contains(&w.duty) {
                return bad("wifi interferer needs width >= 1, center < channels and duty in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerEstimate {
    pub fer_master: f64,
    pub fer_slave: f64,
    /// Larger of the two 95 % confidence half-widths across runs.
    pub ci95_halfwidth: f64,
    pub ci95_master: f64,
    pub ci95_slave: f64,
    /// Standard errors of the two means.
    pub se_master: f64,
    pub se_slave: f64,
    pub runs: usize,
    #[serde(skip)]
    pub per_run_master: Vec<f64>,
    #[serde(skip)]
    pub per_run_slave: Vec<f64>,
}

impl FerEstimate {
    /// A point value with no sampling error.
    pub fn exact(fer_master: f64, fer_slave: f64) -> Self {
        Self {
            fer_master,
            fer_slave,
            ci95_halfwidth: 0.0,
            ci95_master: 0.0,
            ci95_slave: 0.0,
            se_master: 0.0,
            se_slave: 0.0,
            runs: 0,
            per_run_master: Vec::new(),
            per_run_slave: Vec::new(),
        }
    }

    fn from_runs(master: Vec<f64>, slave: Vec<f64>) -> Self {
        let (m_mean, m_se) = mean_se(&master);
        let (s_mean, s_se) = mean_se(&slave);
        let t = t_quantile(master.len());
        Self {
            fer_master: m_mean,
            fer_slave: s_mean,
            ci95_halfwidth: t * m_se.max(s_se),
            ci95_master: t * m_se,
            ci95_slave: t * s_se,
            se_master: m_se,
            se_slave: s_se,
            runs: master.len(),
            per_run_master: master,
            per_run_slave: slave,
        }
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sided 95 % Student-t quantile for `runs` samples (0 when undefined).
fn t_quantile(runs: usize) -> f64 {
    if runs < 2 {
        return 0.0;
    }
    StudentsT::new(0.0, 1.0, (runs - 1) as f64).map_or(0.0, |d| d.inverse_cdf(0.975))
}

/// Runs the Monte Carlo experiment. Each run has its own ChaCha stream
/// derived from `seed`, so the result does not depend on thread count.
pub fn simulate_fer(cfg: &FerConfig) -> Result<FerEstimate> {
    cfg.validate()?;
    let runs: Vec<(f64, f64)> = (0..cfg.runs).into_par_iter().map(|r| simulate_run(cfg, r as u64)).collect();
    let (master, slave) = runs.into_iter().unzip();
    Ok(FerEstimate::from_runs(master, slave))
}

fn simulate_run(cfg: &FerConfig, run: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run);
    let others = cfg.piconets - 1;
    // interferers beyond the radius can be dropped for the whole run
    let near = (0..others)
        .filter(|_| rng.random_range(cfg.distance_min_m..=cfg.distance_max_m) <= cfg.interference_radius_m)
        .count();
    let band = cfg.wifi_interferer.map(|w| (w.band(cfg.channels), w.duty));
    let hit = |rng: &mut ChaCha8Rng| {
        let ch = rng.random_range(0..cfg.channels);
        let mut lost = false;
        for _ in 0..near {
            // draw both even when already lost to keep streams aligned
            let on = rng.random_bool(cfg.piconet_duty);
            let other = rng.random_range(0..cfg.channels);
            lost |= on && other == ch;
        }
        if let Some(((lo, hi), duty)) = band {
            lost |= rng.random_bool(duty) && (lo..hi).contains(&ch);
        }
        lost
    };
    let cycles = cfg.slots_per_run / 2;
    let (mut slave_lost, mut master_lost) = (0u64, 0u64);
    for _ in 0..cycles {
        let poll_lost = hit(&mut rng);
        let reply_lost = hit(&mut rng);
        slave_lost += u64::from(poll_lost);
        master_lost += u64::from(poll_lost || reply_lost);
    }
    (master_lost as f64 / cycles as f64, slave_lost as f64 / cycles as f64)
}

/// Probability that at least one of `piconets - 1` always-on interferers
/// lands on the same channel in a given slot.
pub fn fer_analytic(piconets: usize, channels: usize) -> f64 {
    let others = piconets.saturating_sub(1) as i32;
    1.0 - (1.0 - 1.0 / channels as f64).powi(others)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Measured,
    Anchor,
    Interpolated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    #[serde(rename = "P")]
    pub piconets: usize,
    pub fer: f64,
    pub source: ReferenceSource,
}

const REFERENCE_CSV: &str = include_str!("../data/fer_reference.csv");

/// The bundled reference curve, ascending in P.
pub fn reference_table() -> Vec<ReferencePoint> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(REFERENCE_CSV.as_bytes());
    rdr.deserialize().map(|r| r.expect("bundled reference table is well formed")).collect()
}

pub fn fer_reference_point(piconets: usize) -> Result<ReferencePoint> {
    let table = reference_table();
    let (lo, hi) = (table[0].piconets, table[table.len() - 1].piconets);
    table
        .into_iter()
        .find(|r| r.piconets == piconets)
        .ok_or_else(|| Error::Range(format!("P = {piconets} outside reference table [{lo}, {hi}]")))
}

/// Reference FER for `piconets` co-located piconets.
pub fn fer_reference(piconets: usize) -> Result<f64> {
    fer_reference_point(piconets).map(|r| r.fer)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FerMode {
    MonteCarlo,
    Analytic,
    ReferenceTable,
}

impl std::str::FromStr for FerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte_carlo" => Ok(Self::MonteCarlo),
            "analytic" => Ok(Self::Analytic),
            "reference_table" => Ok(Self::ReferenceTable),
            _ => Err(Error::Parameter(format!("unknown FER mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerCurve {
    pub mode: FerMode,
    pub points: BTreeMap<usize, FerEstimate>,
}

impl FerCurve {
    /// Evaluates every `P` in `piconets`. Monte Carlo points reuse `base`
    /// with only the piconet count changed.
    pub fn compute(mode: FerMode, piconets: &[usize], base: &FerConfig) -> Result<Self> {
        let mut points = BTreeMap::new();
        for &p in piconets {
            let est = match mode {
                FerMode::MonteCarlo => simulate_fer(&FerConfig { piconets: p, ..base.clone() })?,
                FerMode::Analytic => {
                    if p < 1 {
                        return Err(Error::Parameter("P must be at least 1".into()));
                    }
                    let q = fer_analytic(p, base.channels);
                    FerEstimate::exact(1.0 - (1.0 - q) * (1.0 - q), q)
                }
                FerMode::ReferenceTable => {
                    let f = fer_reference(p)?;
                    FerEstimate::exact(f, f)
                }
            };
            points.insert(p, est);
        }
        Ok(Self { mode, points })
    }

    /// Per-frame error rate used for throughput at `piconets` co-located
    /// piconets: the slave-side rate, which is the quantity the fitted duty
    /// and the reference table describe.
    pub fn fer_at(&self, piconets: usize) -> Result<f64> {
        self.points
            .get(&piconets)
            .map(|e| e.fer_slave)
            .ok_or_else(|| Error::Range(format!("FER curve has no point for P = {piconets}")))
    }

    /// CSV `P,fer_master,fer_slave,ci95`, values to six decimals.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["P", "fer_master", "fer_slave", "ci95"])?;
        for (p, e) in &self.points {
            out.write_record([
                p.to_string(),
                format!("{:.6}", e.fer_master),
                format!("{:.6}", e.fer_slave),
                format!("{:.6}", e.ci95_halfwidth),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
