use std::fs;
use std::path::Path;

use scatternet_core::scenario::{load_report, run_scenario, Method, OutputFormat, ScenarioConfig};

fn small(text: &str) -> ScenarioConfig {
    let base = "n_values = 20\nrepeats = 2\nfer_runs = 4\nfer_slots_per_run = 2000\nexact_node_limit = 100\n";
    ScenarioConfig::parse(&format!("{base}{text}")).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn zero_nodes_give_zero_metrics() {
    let cfg = small("scenario = compare_methods\nn_values = 0\n");
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.records.len(), 2 * 4);
    for r in &report.records {
        assert_eq!((r.masters, r.super_masters, r.orphans), (0, 0, 0));
        assert_eq!(r.te, Some(0.0), "{r:?}");
        assert_eq!(r.g, Some(0.0));
        assert_eq!(r.ef, Some(0.0));
    }
}

#[test]
fn json_bundle_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&small("scenario = compare_methods\n")).unwrap();
    report.emit(dir.path(), OutputFormat::Csv).unwrap();
    assert_eq!(load_report(dir.path()).unwrap(), report);
}

#[test]
fn empty_report_writes_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&small("scenario = fer_curve\nfer_p_values = 1,2\n")).unwrap();
    assert!(report.records.is_empty());
    report.emit(dir.path(), OutputFormat::Csv).unwrap();
    assert_eq!(read(dir.path(), "records.csv").lines().count(), 1);
    assert_eq!(read(dir.path(), "fer_curve.csv").lines().count(), 3);
}

#[test]
fn table2_layout_and_paired_topologies() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&small("scenario = compare_methods\nn_values = 20,30\n")).unwrap();
    report.emit(dir.path(), OutputFormat::Csv).unwrap();
    let table2 = read(dir.path(), "table2.csv");
    let mut lines = table2.lines();
    assert_eq!(lines.next(), Some("n,heuristic_te,direct_te,exact_te,gap_pct,direct_pct"));
    assert_eq!(lines.count(), 2);
    // every (n, seed) is priced by every method
    for n in [20, 30] {
        for seed in [1, 2] {
            let methods: Vec<Method> =
                report.records.iter().filter(|r| r.n == n && r.seed == seed).map(|r| r.method).collect();
            assert_eq!(methods.len(), 4, "n={n} seed={seed}");
        }
    }
    for f in ["table3.csv", "metrics.csv", "aggregates.csv", "fer_curve.csv", "report.json", "timings.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn decimals_are_fixed_at_four_places() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&small("scenario = compare_methods\n")).unwrap().emit(dir.path(), OutputFormat::Csv).unwrap();
    let text = read(dir.path(), "table3.csv");
    for field in text.lines().skip(1).flat_map(|l| l.split(',').skip(1)) {
        let (_, frac) = field.split_once('.').expect("decimal point");
        assert_eq!(frac.len(), 4, "{field}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = small("scenario = s2_bilevel\n");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg).unwrap().emit(a.path(), OutputFormat::Csv).unwrap();
    run_scenario(&cfg).unwrap().emit(b.path(), OutputFormat::Csv).unwrap();
    let mut names: Vec<String> =
        fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for name in names.iter().filter(|n| !n.starts_with("timings")) {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    assert!(names.contains(&"fig4_bilevel.csv".to_string()));
}

#[test]
fn size_sweep_reports_every_cap() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&small("scenario = s3_size_sweep\nrepeats = 1\nl2_sizes = 1,2,4,8\n")).unwrap();
    report.emit(dir.path(), OutputFormat::Csv).unwrap();
    let supers: Vec<usize> = report.records.iter().map(|r| r.super_masters).collect();
    assert_eq!(supers.len(), 4);
    assert!(supers.windows(2).all(|w| w[0] >= w[1]), "{supers:?}");
    // with a cap of one every master leads its own second-level cluster
    assert_eq!(report.records[0].super_masters, report.records[0].masters);
    assert_eq!(read(dir.path(), "fig5.csv").lines().count(), 5);
}

#[test]
fn single_level_scenario_has_no_second_level() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&small("scenario = s1_single_level\n")).unwrap();
    report.emit(dir.path(), OutputFormat::Csv).unwrap();
    assert!(report.records.iter().all(|r| r.method == Method::ExactSingle && r.super_masters == 0 && r.td2_us.is_none()));
    assert!(read(dir.path(), "fig4_single_level.csv").starts_with("n,masters_mean,masters_ci95,optimal_runs,runs\n"));
}

#[test]
fn json_format_writes_only_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&small("scenario = s1_single_level\n")).unwrap().emit(dir.path(), OutputFormat::Json).unwrap();
    let mut names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["report.json", "timings.json"]);
}
