//! `scatternet`: topology generation, clustering, delay, FER, energy
//! metrics and scenario runs from the command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use scatternet_core::exact::{solve_bilevel, solve_single_level, SolveStatus};
use scatternet_core::heuristic::{build_hierarchy_with, HeuristicOptions};
use scatternet_core::interference::{FerCurve, FerMode};
use scatternet_core::metrics::{
    effective_throughput, energy_direct, total_energy, total_energy_single_level, write_metrics_csv, Approach,
    MetricsRow,
};
use scatternet_core::model::{generate_topology, price_hierarchy, validate_hierarchy_excluding, Hierarchy, NodeId, Topology};
use scatternet_core::scenario::{run_scenario, OutputFormat, ScenarioConfig, ScenarioKind};
use scatternet_core::schedule::{build_slot_plan, total_delay_bilevel, T};
use scatternet_core::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "scatternet", version, about = "Two-level Bluetooth/Wi-Fi clustering toolkit")]
struct Cli {
    /// Topology / scenario seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Config override, repeatable: `--set key=value`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; without it single results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Emit the heuristic's election trace as JSON.
    #[arg(long, global = true)]
    trace: bool,
    /// Print the effective config with every default documented, then exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Topology generation.
    #[command(subcommand)]
    Topo(TopoCmd),
    /// Heuristic or exact clustering of a topology file.
    #[command(subcommand)]
    Cluster(ClusterCmd),
    /// Delay bounds of a hierarchy file.
    Delay(DelayArgs),
    /// Frame error rate against the number of co-located piconets.
    Fer(FerArgs),
    /// Energy, throughput and efficiency of a hierarchy.
    Metrics(MetricsArgs),
    /// Experiment scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Heuristic vs exact wall-clock over N (the runtime_bench scenario).
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum TopoCmd {
    /// Random uniform topology.
    Gen {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand)]
enum ClusterCmd {
    /// Greedy two-level clustering.
    Heur(TopoArg),
    /// Optimal clustering by branch and bound.
    Exact {
        #[command(flatten)]
        topo: TopoArg,
        /// Solve the one-level model only.
        #[arg(long)]
        single_level: bool,
    },
}

#[derive(Args)]
struct TopoArg {
    /// Topology CSV (`id,x,y,battery,has_wifi`).
    #[arg(long)]
    topo: PathBuf,
}

#[derive(Args)]
struct DelayArgs {
    /// Hierarchy JSON written by `cluster`.
    #[arg(long)]
    hierarchy: PathBuf,
    /// Also list every scheduled transmission.
    #[arg(long)]
    slots: bool,
}

#[derive(Args)]
struct FerArgs {
    /// Piconet counts, overriding `fer_p_values`.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    /// monte_carlo | analytic | reference_table, overriding `fer_mode`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Hierarchy JSON written by `cluster`.
    #[arg(long)]
    hierarchy: PathBuf,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run the configured scenario and write its report.
    Run {
        /// Scenario name, overriding `scenario`.
        #[arg(long)]
        scenario: Option<String>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Node counts, overriding `n_values`.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Config(_)) { EXIT_CONFIG } else { 1 };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_CONFIG, message: message.into() }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Writes `body` to `<out>/<name>` when an output directory is given,
/// otherwise to stdout.
fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), body)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",") + "\n";
    for r in rows {
        s += &(r.join(",") + "\n");
    }
    s
}

fn opt_id(x: Option<NodeId>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn load_topology(path: &Path) -> Result<Topology, Failure> {
    Topology::load(path).map_err(|e| Failure { code: 1, message: format!("{}: {e}", path.display()) })
}

/// Accepts the document written by `cluster` or a bare hierarchy.
fn load_hierarchy(path: &Path) -> Result<Hierarchy, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut v: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(h) = v.get_mut("hierarchy") {
        v = h.take();
    }
    Ok(serde_json::from_value(v)?)
}

fn write_hierarchy(
    cli: &Cli,
    cfg: &ScenarioConfig,
    topo: &Topology,
    h: &Hierarchy,
    orphans: &BTreeSet<NodeId>,
    extra: serde_json::Value,
) -> Result<(), Failure> {
    let price = price_hierarchy(topo, h, &cfg.model);
    let report = validate_hierarchy_excluding(topo, h, &cfg.model, orphans)?;
    let mut doc = json!({
        "objective": price.total(),
        "level1_cost": price.level1_cost(),
        "level2_cost": price.level2_cost(),
        "masters": h.masters(),
        "super_masters": h.super_masters(),
        "orphans": orphans,
        "feasible": report.feasible,
        "hierarchy": h,
    });
    if let (Some(d), serde_json::Value::Object(e)) = (doc.as_object_mut(), extra) {
        d.extend(e);
    }
    let out = cli.out.as_deref();
    if out.is_some() || cli.format == Format::Json {
        emit(out, "hierarchy.json", &pretty(&doc)?)?;
    }
    if cli.format == Format::Csv {
        let rows = (0..h.len()).map(|i| {
            let role = serde_json::to_value(h.role(i)).ok().and_then(|r| r.as_str().map(String::from)).unwrap_or_default();
            vec![i.to_string(), role, opt_id(h.l1_master_of[i]), opt_id(h.l2_master_of[i])]
        });
        emit(out, "hierarchy.csv", &csv_text(&["node", "role", "l1_master", "l2_master"], rows))?;
    }
    Ok(())
}

fn fer_curve_for(cfg: &ScenarioConfig, ps: &[usize]) -> Result<FerCurve, Failure> {
    let ps: Vec<usize> = ps.iter().copied().filter(|&p| p > 0).collect::<BTreeSet<_>>().into_iter().collect();
    Ok(FerCurve::compute(cfg.fer_mode, &ps, &cfg.fer)?)
}

fn run(cli: &Cli) -> CliResult {
    let mut cfg = load_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        return Err(config_error("no command given; see --help"));
    };
    let out = cli.out.as_deref();
    match command {
        Command::Topo(TopoCmd::Gen { n }) => {
            cfg.validate()?;
            let topo = generate_topology(*n, cfg.area_for(*n), cfg.wifi_prob, cfg.battery_law(), cfg.seed)?;
            match cli.format {
                Format::Csv => emit(out, "topology.csv", &topo.to_csv_string())?,
                Format::Json => emit(out, "topology.json", &pretty(&json!({"area": topo.area(), "seed": topo.seed(), "nodes": topo.nodes()}))?)?,
            }
        }
        Command::Cluster(ClusterCmd::Heur(arg)) => {
            cfg.model.validate()?;
            let topo = load_topology(&arg.topo)?;
            let opts = HeuristicOptions { force_promote_orphans: cfg.force_promote_orphans };
            let outcome = build_hierarchy_with(&topo, &cfg.model, opts);
            if cli.trace {
                match out {
                    Some(_) => emit(out, "trace.json", &pretty(&outcome.trace)?)?,
                    None => eprint!("{}", pretty(&outcome.trace)?),
                }
            }
            write_hierarchy(cli, &cfg, &topo, &outcome.hierarchy, &outcome.orphans, json!({"method": "heuristic"}))?;
        }
        Command::Cluster(ClusterCmd::Exact { topo: arg, single_level }) => {
            cfg.validate()?;
            let topo = load_topology(&arg.topo)?;
            let sol = if *single_level {
                solve_single_level(&topo, &cfg.model, cfg.budget())?
            } else {
                solve_bilevel(&topo, &cfg.model, cfg.budget())?
            };
            let extra = json!({
                "method": if *single_level { "exact_single" } else { "exact_bilevel" },
                "status": sol.status,
                "lower_bound": sol.lower_bound.is_finite().then_some(sol.lower_bound),
                "gap": sol.gap,
                "nodes_explored": sol.nodes_explored,
            });
            match sol.status {
                SolveStatus::Infeasible => {
                    eprintln!("infeasible");
                    return Ok(EXIT_INFEASIBLE);
                }
                SolveStatus::Timeout if sol.objective.is_infinite() => {
                    eprintln!("search limit reached before any feasible clustering was found");
                    return Ok(EXIT_TIMEOUT);
                }
                _ => {}
            }
            write_hierarchy(cli, &cfg, &topo, &sol.hierarchy, &BTreeSet::new(), extra)?;
            if sol.status == SolveStatus::Timeout {
                eprintln!("search limit reached; incumbent gap {:.4}", sol.gap);
                return Ok(EXIT_TIMEOUT);
            }
        }
        Command::Delay(args) => {
            let h = load_hierarchy(&args.hierarchy)?;
            let report = total_delay_bilevel(&h, T)?;
            match cli.format {
                Format::Json => emit(out, "delay.json", &pretty(&report)?)?,
                Format::Csv => {
                    let rows = report
                        .level1
                        .iter()
                        .map(|(m, t)| vec!["1".into(), m.to_string(), t.0.to_string()])
                        .chain(report.level2.iter().map(|(m, t)| vec!["2".into(), m.to_string(), t.0.to_string()]));
                    let mut body = csv_text(&["level", "head", "tts_us"], rows);
                    body += &format!("# d1_max_us={} td2_us={}\n", report.d1_max.0, report.td2.0);
                    emit(out, "delay.csv", &body)?;
                }
            }
            if args.slots {
                emit(out, "slots.json", &pretty(&build_slot_plan(&h, T))?)?;
            }
        }
        Command::Fer(args) => {
            if let Some(m) = &args.mode {
                cfg.fer_mode = m.parse::<FerMode>().map_err(|e| config_error(e.to_string()))?;
            }
            if !args.p.is_empty() {
                cfg.fer_p_values = args.p.clone();
            }
            cfg.fer.validate()?;
            let curve = FerCurve::compute(cfg.fer_mode, &cfg.fer_p_values, &cfg.fer)?;
            match cli.format {
                Format::Json => emit(out, "fer_curve.json", &pretty(&curve)?)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    curve.write_csv(&mut buf)?;
                    emit(out, "fer_curve.csv", &String::from_utf8_lossy(&buf))?;
                }
            }
        }
        Command::Metrics(args) => {
            cfg.validate()?;
            let h = load_hierarchy(&args.hierarchy)?;
            let curve = fer_curve_for(&cfg, &[h.masters().len(), h.super_masters().len()])?;
            let n = h.len();
            let mut rows = Vec::new();
            for (approach, te) in [
                (Approach::Direct, energy_direct(n, &cfg.energy)),
                (Approach::SingleLevel, total_energy_single_level(&h, &cfg.energy)),
                (Approach::Bilevel, total_energy(&h, &cfg.energy)),
            ] {
                let g = effective_throughput(&h, &cfg.traffic, &curve, approach)?;
                let ef = if te == 0.0 { 0.0 } else { g / te };
                rows.push(MetricsRow { n, approach, te_joules: te, g_bits: g, ef });
            }
            match cli.format {
                Format::Json => emit(out, "metrics.json", &pretty(&rows)?)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_metrics_csv(&rows, &mut buf)?;
                    emit(out, "metrics.csv", &String::from_utf8_lossy(&buf))?;
                }
            }
        }
        Command::Scenario(ScenarioCmd::Run { scenario }) => {
            if let Some(s) = scenario {
                cfg.set("scenario", s)?;
            }
            return run_and_emit(cli, &cfg);
        }
        Command::Bench(args) => {
            cfg.scenario = ScenarioKind::RuntimeBench;
            if !args.n.is_empty() {
                cfg.n_values = args.n.clone();
            }
            return run_and_emit(cli, &cfg);
        }
    }
    Ok(0)
}

fn run_and_emit(cli: &Cli, cfg: &ScenarioConfig) -> CliResult {
    cfg.validate()?;
    let report = run_scenario(cfg)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    report.emit(&dir, format).map_err(|e| Failure { code: 1, message: format!("{}: {e}", dir.display()) })?;
    let timeouts = report.records.iter().filter(|r| r.status == "timeout").count();
    eprintln!(
        "{}: {} records, {} exact timeouts, written to {}",
        cfg.scenario.as_str(),
        report.records.len(),
        timeouts,
        dir.display()
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
