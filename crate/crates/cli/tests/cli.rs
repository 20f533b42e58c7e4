use std::fs;
use std::process::Command;

use serde_json::Value;

fn rwmax() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rwmax"))
}

fn lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn sample_max_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.jsonl");
    let csv = dir.path().join("m.csv");
    let st = rwmax()
        .args(["sample-max", "--alpha", "0.95", "--a", "0.45", "--law", "normal", "--runs", "4", "--seed", "3", "--emit-paths"])
        .arg("--out")
        .arg(&out)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(st.success());
    let v = lines(&fs::read_to_string(&out).unwrap());
    assert_eq!(v.len(), 6);
    assert_eq!(v[0]["config"]["law"], "standard-normal");
    assert!(v[1]["outcome"]["path"].is_array());
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.starts_with("run,seed,stream,value,kappa,work_units,capped"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# departures\nalpha = 0.8\nbeta = 0.95\nh = 1000\nmu = 1000\nruns = 3\nseed = 1\n").unwrap();
    let out = rwmax().arg("--config").arg(&cfg).args(["sample-departures", "--beta", "0.99", "--runs", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = lines(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(v[0]["config"]["beta"], 0.99);
    assert_eq!(v[0]["config"]["alpha"], 0.8);
    assert_eq!(v[0]["n_runs"], 2);
    assert_eq!(v[0]["seed"], 1);
}

#[test]
fn departures_csv_and_same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(format!("{name}.jsonl"));
        let csv = dir.path().join(format!("{name}.csv"));
        let st = rwmax()
            .args(["sample-departures", "--alpha", "0.8", "--beta", "0.99", "--h", "1000", "--mu", "1000"])
            .args(["--runs", "5", "--seed", "9", "--path-cap", "1000000"])
            .arg("--out")
            .arg(&out)
            .arg("--csv")
            .arg(&csv)
            .status()
            .unwrap();
        assert!(st.success());
        (fs::read(&out).unwrap(), fs::read_to_string(&csv).unwrap())
    };
    let (a, csv_a) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    assert!(csv_a.starts_with("run,index,departure\n"));
}

#[test]
fn tune_emits_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = rwmax()
        .args(["tune", "--alphas", "0.9,0.95", "--as", "0.4,0.45", "--runs", "5", "--seed", "2"])
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(lines(&String::from_utf8(out.stdout).unwrap()).len(), 4);
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("a,alpha=0.9,alpha=0.95\n0.4,"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn validate_exit_codes() {
    let ok = rwmax().args(["validate", "--suite", "pmfs", "--seed", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(lines(&String::from_utf8(ok.stdout).unwrap()).iter().all(|l| l["pass"] == true));

    // The reference departure configurations are capped, so this suite fails.
    let failed = rwmax().args(["validate", "--suite", "poisson", "--seed", "1"]).output().unwrap();
    assert_eq!(failed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failed.stderr).contains("[FAIL] 9"));
}

#[test]
fn bad_input_is_an_error() {
    let code = |args: &[&str]| rwmax().args(args).output().unwrap().status.code();
    assert_eq!(code(&["validate", "--suite", "bogus"]), Some(2));
    assert_eq!(code(&["validate"]), Some(2));
    assert_eq!(code(&["sample-max", "--a", "0.9", "--runs", "1"]), Some(2));
    assert_eq!(code(&["sample-max", "--law", "cauchy", "--runs", "1"]), Some(2));
    assert_eq!(code(&["--config", "/nonexistent/x.cfg", "sample-max"]), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "suite = pmfs\n").unwrap();
    assert_eq!(rwmax().arg("--config").arg(&cfg).args(["sample-max", "--runs", "1"]).output().unwrap().status.code(), Some(2));
}
