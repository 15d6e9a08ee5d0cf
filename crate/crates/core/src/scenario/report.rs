//! Scenario records, aggregates and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::config::{ScenarioConfig, ScenarioKind};
use crate::interference::FerCurve;
use crate::metrics::{write_metrics_csv, Approach, MetricsRow};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Greedy hierarchy, priced as two levels.
    Heuristic,
    /// The same greedy hierarchy priced as one level.
    HeuristicSingle,
    ExactSingle,
    ExactBilevel,
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Heuristic => "heuristic",
            Self::HeuristicSingle => "heuristic_single",
            Self::ExactSingle => "exact_single",
            Self::ExactBilevel => "exact_bilevel",
            Self::Direct => "direct",
        }
    }

    pub fn approach(self) -> Approach {
        match self {
            Self::Heuristic | Self::ExactBilevel => Approach::Bilevel,
            Self::HeuristicSingle | Self::ExactSingle => Approach::SingleLevel,
            Self::Direct => Approach::Direct,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Self::ExactSingle | Self::ExactBilevel)
    }
}

/// Outcome of one method on one topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    pub l2_size: usize,
    /// `optimal`, `timeout` or `infeasible` for exact methods, `ok` otherwise.
    pub status: String,
    pub masters: usize,
    pub super_masters: usize,
    pub orphans: usize,
    pub objective: Option<f64>,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    pub d1_max_us: Option<u64>,
    pub td2_us: Option<u64>,
    pub te: Option<f64>,
    pub g: Option<f64>,
    pub ef: Option<f64>,
}

/// Wall-clock time of one record, kept apart so the other outputs stay
/// reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    pub l2_size: usize,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Student-t 95 % half-width; zero with fewer than two samples.
    pub ci95: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let k = xs.len();
        if k == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / k as f64;
        if k < 2 {
            return Some(Self { mean, ci95: 0.0, count: k });
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (k - 1) as f64).map_or(f64::NAN, |d| d.inverse_cdf(0.975));
        Some(Self { mean, ci95: t * (var / k as f64).sqrt(), count: k })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub method: Method,
    pub l2_size: usize,
    pub runs: usize,
    pub optimal_runs: usize,
    pub masters: Option<Stat>,
    pub super_masters: Option<Stat>,
    pub objective: Option<Stat>,
    pub td2_us: Option<Stat>,
    pub te: Option<Stat>,
    pub g: Option<Stat>,
    pub ef: Option<Stat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub records: Vec<Record>,
    pub aggregates: Vec<Aggregate>,
    pub fer_curve: Option<FerCurve>,
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

/// Groups records by `(n, method, l2_size)`; means over seeds.
pub fn aggregate(records: &[Record]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, Method, usize), Vec<&Record>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.method, r.l2_size)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, method, l2_size), rs)| {
            let solved: Vec<&&Record> = rs.iter().filter(|r| r.status != "infeasible").collect();
            let stat = |f: &dyn Fn(&Record) -> Option<f64>| Stat::of(&solved.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            Aggregate {
                n,
                method,
                l2_size,
                runs: rs.len(),
                optimal_runs: rs.iter().filter(|r| r.status == "optimal").count(),
                masters: stat(&|r| Some(r.masters as f64)),
                super_masters: stat(&|r| Some(r.super_masters as f64)),
                objective: stat(&|r| r.objective),
                td2_us: stat(&|r| r.td2_us.map(|x| x as f64)),
                te: stat(&|r| r.te),
                g: stat(&|r| r.g),
                ef: stat(&|r| r.ef),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    /// Every CSV plus the JSON bundle.
    Csv,
    /// The JSON bundle only.
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn opt4(x: Option<f64>) -> String {
    x.map(f4).unwrap_or_default()
}

fn stat_cols(s: Option<Stat>) -> [String; 2] {
    [opt4(s.map(|s| s.mean)), opt4(s.map(|s| s.ci95))]
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

impl ScenarioReport {
    fn agg(&self, method: Method) -> impl Iterator<Item = &Aggregate> {
        self.aggregates.iter().filter(move |a| a.method == method)
    }

    fn mean_of(&self, n: usize, method: Method, f: impl Fn(&Aggregate) -> Option<Stat>) -> Option<f64> {
        self.agg(method).find(|a| a.n == n).and_then(f).map(|s| s.mean)
    }

    fn n_values(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.aggregates.iter().map(|a| a.n).collect();
        ns.dedup();
        ns
    }

    /// Rows `n,heuristic_te,direct_te,exact_te,gap_pct,direct_pct`. Both
    /// percentages are relative to the exact energy, blank without it.
    pub fn table2_rows(&self) -> Vec<Vec<String>> {
        self.n_values()
            .into_iter()
            .map(|n| {
                let te = |m| self.mean_of(n, m, |a| a.te);
                let (h, d, e) = (te(Method::Heuristic), te(Method::Direct), te(Method::ExactBilevel));
                let pct = |x: Option<f64>| match (x, e) {
                    (Some(x), Some(e)) if e > 0.0 => Some((x - e) / e * 100.0),
                    _ => None,
                };
                vec![n.to_string(), opt4(h), opt4(d), opt4(e), opt4(pct(h)), opt4(pct(d))]
            })
            .collect()
    }

    fn table3_rows(&self) -> Vec<Vec<String>> {
        let methods = [Method::Direct, Method::HeuristicSingle, Method::Heuristic];
        self.n_values()
            .into_iter()
            .map(|n| {
                let mut row = vec![n.to_string()];
                for f in [|a: &Aggregate| a.g, |a: &Aggregate| a.te, |a: &Aggregate| a.ef] {
                    row.extend(methods.iter().map(|&m| opt4(self.mean_of(n, m, f))));
                }
                row
            })
            .collect()
    }

    /// Mean direct, one-level and two-level metrics of the heuristic per N.
    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        let mut rows = Vec::new();
        for n in self.n_values() {
            for m in [Method::Direct, Method::HeuristicSingle, Method::Heuristic] {
                let get = |f: fn(&Aggregate) -> Option<Stat>| self.mean_of(n, m, f);
                if let (Some(te), Some(g), Some(ef)) = (get(|a| a.te), get(|a| a.g), get(|a| a.ef)) {
                    rows.push(MetricsRow { n, approach: m.approach(), te_joules: te, g_bits: g, ef });
                }
            }
        }
        rows
    }

    fn counts_rows(&self, method: Method, with_super: bool, with_l2: bool) -> Vec<Vec<String>> {
        self.agg(method)
            .map(|a| {
                let mut row = vec![a.n.to_string()];
                if with_l2 {
                    row.push(a.l2_size.to_string());
                }
                row.extend(stat_cols(a.masters));
                if with_super {
                    row.extend(stat_cols(a.super_masters));
                }
                row.push(a.optimal_runs.to_string());
                row.push(a.runs.to_string());
                row
            })
            .collect()
    }

    /// Writes the report into `dir`, creating it if needed. Output is a
    /// pure function of the report apart from `timings.*`.
    pub fn emit(&self, dir: &Path, format: OutputFormat) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&self.timings)? + "\n")?;
        if format == OutputFormat::Json {
            return Ok(());
        }
        write_csv(
            &dir.join("records.csv"),
            &[
                "n", "seed", "method", "l2_size", "status", "masters", "super_masters", "orphans", "objective",
                "lower_bound", "gap", "d1_max_us", "td2_us", "te", "g", "ef",
            ],
            self.records.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    r.seed.to_string(),
                    r.method.as_str().into(),
                    r.l2_size.to_string(),
                    r.status.clone(),
                    r.masters.to_string(),
                    r.super_masters.to_string(),
                    r.orphans.to_string(),
                    opt4(r.objective),
                    opt4(r.lower_bound),
                    opt4(r.gap),
                    r.d1_max_us.map(|x| x.to_string()).unwrap_or_default(),
                    r.td2_us.map(|x| x.to_string()).unwrap_or_default(),
                    opt4(r.te),
                    opt4(r.g),
                    opt4(r.ef),
                ]
            }),
        )?;
        write_csv(
            &dir.join("aggregates.csv"),
            &[
                "n", "method", "l2_size", "runs", "optimal_runs", "masters_mean", "masters_ci95", "super_masters_mean",
                "super_masters_ci95", "objective_mean", "objective_ci95", "td2_us_mean", "td2_us_ci95", "te_mean",
                "te_ci95", "g_mean", "g_ci95", "ef_mean", "ef_ci95",
            ],
            self.aggregates.iter().map(|a| {
                let mut row = vec![
                    a.n.to_string(),
                    a.method.as_str().into(),
                    a.l2_size.to_string(),
                    a.runs.to_string(),
                    a.optimal_runs.to_string(),
                ];
                for s in [a.masters, a.super_masters, a.objective, a.td2_us, a.te, a.g, a.ef] {
                    row.extend(stat_cols(s));
                }
                row
            }),
        )?;
        write_csv(
            &dir.join("timings.csv"),
            &["n", "seed", "method", "l2_size", "seconds"],
            self.timings.iter().map(|t| {
                vec![t.n.to_string(), t.seed.to_string(), t.method.as_str().into(), t.l2_size.to_string(), format!("{:.6}", t.seconds)]
            }),
        )?;
        match self.config.scenario {
            ScenarioKind::S1SingleLevel => write_csv(
                &dir.join("fig4_single_level.csv"),
                &["n", "masters_mean", "masters_ci95", "optimal_runs", "runs"],
                self.counts_rows(Method::ExactSingle, false, false),
            )?,
            ScenarioKind::S2Bilevel => {
                write_csv(
                    &dir.join("fig4_bilevel.csv"),
                    &["n", "masters_mean", "masters_ci95", "super_masters_mean", "super_masters_ci95", "optimal_runs", "runs"],
                    self.counts_rows(Method::ExactBilevel, true, false),
                )?;
                write_csv(&dir.join("table2.csv"), &TABLE2_HEADER, self.table2_rows())?;
            }
            ScenarioKind::S3SizeSweep => write_csv(
                &dir.join("fig5.csv"),
                &["n", "l2_size", "masters_mean", "masters_ci95", "super_masters_mean", "super_masters_ci95", "optimal_runs", "runs"],
                self.counts_rows(Method::ExactBilevel, true, true),
            )?,
            ScenarioKind::CompareMethods => {
                write_csv(&dir.join("table2.csv"), &TABLE2_HEADER, self.table2_rows())?;
                write_csv(
                    &dir.join("table3.csv"),
                    &[
                        "n", "g_direct", "g_single", "g_bilevel", "te_direct", "te_single", "te_bilevel", "ef_direct",
                        "ef_single", "ef_bilevel",
                    ],
                    self.table3_rows(),
                )?;
                write_metrics_csv(&self.metrics_rows(), BufWriter::new(File::create(dir.join("metrics.csv"))?))?;
            }
            ScenarioKind::RuntimeBench => {
                let mut by: BTreeMap<(usize, Method), Vec<f64>> = BTreeMap::new();
                for t in &self.timings {
                    by.entry((t.n, t.method)).or_default().push(t.seconds);
                }
                let mean = |n, m| by.get(&(n, m)).and_then(|xs| Stat::of(xs));
                write_csv(
                    &dir.join("fig12.csv"),
                    &["n", "heuristic_s_mean", "heuristic_s_ci95", "exact_s_mean", "exact_s_ci95", "exact_optimal_runs", "runs"],
                    self.n_values().into_iter().map(|n| {
                        let mut row = vec![n.to_string()];
                        for m in [Method::Heuristic, Method::ExactBilevel] {
                            let s = mean(n, m);
                            row.push(s.map(|s| format!("{:.6}", s.mean)).unwrap_or_default());
                            row.push(s.map(|s| format!("{:.6}", s.ci95)).unwrap_or_default());
                        }
                        let exact = self.agg(Method::ExactBilevel).find(|a| a.n == n);
                        row.push(exact.map(|a| a.optimal_runs.to_string()).unwrap_or_default());
                        row.push(self.agg(Method::Heuristic).find(|a| a.n == n).map(|a| a.runs).unwrap_or(0).to_string());
                        row
                    }),
                )?;
            }
            ScenarioKind::FerCurve => {}
        }
        if let Some(curve) = &self.fer_curve {
            curve.write_csv(BufWriter::new(File::create(dir.join("fer_curve.csv"))?))?;
        }
        Ok(())
    }
}

const TABLE2_HEADER: [&str; 6] = ["n", "heuristic_te", "direct_te", "exact_te", "gap_pct", "direct_pct"];

/// Reads back a report written by [`ScenarioReport::emit`], timings included
/// when present.
pub fn load_report(dir: &Path) -> Result<ScenarioReport> {
    let mut report: ScenarioReport = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?;
    let timings = dir.join("timings.json");
    if timings.exists() {
        report.timings = serde_json::from_str(&std::fs::read_to_string(timings)?)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_matches_hand_computation() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        // t(0.975, 3) = 3.182446, sd = 1.290994
        assert!((s.ci95 - 3.182446 * 1.290994 / 2.0).abs() < 1e-5);
        assert_eq!(Stat::of(&[7.0]).unwrap().ci95, 0.0);
        assert!(Stat::of(&[]).is_none());
    }
}
