//! Output formats against versioned golden files. Regenerate with
//! `RWMAX_BLESS=1 cargo test --test report_schema` after an intentional
//! format change, and bump the schema version.

use std::path::PathBuf;

use rwmax::harness::{run_replications, run_suite, SimConfig, Suite, Task, REPORT_SCHEMA};
use rwmax::queue::{ArrivalProcess, QueueModel, DEPARTURES_SCHEMA};
use rwmax::SimRng;

fn check_golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/golden").join(name);
    if std::env::var_os("RWMAX_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

fn departures_config() -> SimConfig {
    SimConfig { alpha: 0.8, beta: 0.99, h: 1000.0, mu: 1000.0, ..SimConfig::default() }
}

#[test]
fn max_alpha_report_golden() {
    let cfg = SimConfig { alpha: 0.95, a: 0.45, emit_paths: true, ..SimConfig::default() };
    let r = run_replications(Task::MaxAlpha, &cfg, 3, 7).unwrap();
    assert_eq!(r.schema, REPORT_SCHEMA);
    check_golden("max_alpha.report.v1.jsonl", &r.to_json_lines());
    check_golden("max_alpha.runs.v1.csv", &r.runs_csv());
}

#[test]
fn departures_report_golden() {
    let r = run_replications(Task::Departures, &departures_config(), 4, 7).unwrap();
    check_golden("departures.report.v1.jsonl", &r.to_json_lines());
    check_golden("departures.v1.csv", &r.departures_csv());
}

#[test]
fn departure_record_golden() {
    let c = departures_config();
    let m = QueueModel::new(ArrivalProcess::Poisson { mean: c.mu }, c.alpha, c.beta, c.h).unwrap();
    let d = m.sample_departures(&mut SimRng::stream(7, 0)).unwrap();
    let rec = d.record(0, 7);
    assert_eq!(rec.schema, DEPARTURES_SCHEMA);
    let line = serde_json::to_string(&rec).unwrap() + "\n";
    check_golden("departure_record.v1.jsonl", &line);
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    for key in ["seed", "xi1", "xi2", "departures", "work_units"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn suite_report_golden() {
    let r = run_suite(Suite::Tilting, 5).unwrap();
    check_golden("tilting.suite.v1.jsonl", &r.to_json_lines());
}

#[test]
fn report_lines_parse_back() {
    let r = run_replications(Task::TwoSided, &SimConfig { horizon: 500, ..SimConfig::default() }, 3, 2).unwrap();
    let lines: Vec<serde_json::Value> = r.to_json_lines().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["type"], "header");
    assert_eq!(lines[1]["type"], "run");
    assert_eq!(lines[1]["outcome"]["kind"], "two-sided");
    assert_eq!(lines[4]["type"], "summary");
    assert_eq!(lines[4]["summary"]["completed"], 3);
}
