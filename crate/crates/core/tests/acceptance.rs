//! Runs every validation suite, prints one PASS/FAIL line per acceptance
//! criterion, and checks that the failing set is exactly the known one.
//!
//! Criterion 9 (departure counts for (alpha, beta) = (0.55, 0.7) and
//! (0.6, 0.8) with unit rates) cannot complete under a path cap of 10^6: the
//! arrival-walk certificate needs a first proposal block of ~1.4e11 and
//! ~3.9e25 steps respectively, so every replication is capped. It is run in
//! full and expected to fail; the test also fails if it ever passes, so the
//! expectation cannot go stale.

use std::collections::BTreeMap;

use rwmax::harness::{run_suite, CriterionResult, Suite, SuiteReport};

const SEED: u64 = 20_261_015;
const KNOWN_RED: [u32; 1] = [9];

const NAMES: [&str; 11] = [
    "record detection: P(J=1) >= 0.7327",
    "acceptance ratios within 1/4 and 1/2",
    "M_alpha matches truncated brute force (KS)",
    "per-sample certificates",
    "auxiliary pmfs match direct summation",
    "tilted-sampler means",
    "kappa is geometric",
    "first breaker index law",
    "departure counts Poisson(1) at the reference configurations",
    "mean work decreases in a",
    "suite reruns are bit-identical",
];

fn line(id: u32, pass: bool, detail: &str) -> String {
    format!("criterion {id:>2} [{}] {}: {detail}", if pass { "PASS" } else { "FAIL" }, NAMES[id as usize - 1])
}

fn summarize(results: &[&CriterionResult]) -> (bool, String) {
    let pass = !results.is_empty() && results.iter().all(|c| c.pass);
    let failing: Vec<&str> = results.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let detail = if results.is_empty() {
        "no results".to_string()
    } else if failing.is_empty() && results.len() == 1 {
        results[0].detail.clone()
    } else if failing.is_empty() {
        format!("{} checks passed", results.len())
    } else {
        let first = results.iter().find(|c| !c.pass).unwrap();
        format!("{}/{} failing ({}); {}", failing.len(), results.len(), failing.join("; "), first.detail)
    };
    (pass, detail)
}

#[test]
fn acceptance_criteria() {
    let mut reports: Vec<SuiteReport> = Vec::new();
    let mut identical = Vec::new();
    for suite in Suite::ALL {
        let first = run_suite(suite, SEED).expect("suite runs");
        let again = run_suite(suite, SEED).expect("suite reruns");
        identical.push((suite, first.to_json_lines() == again.to_json_lines()));
        reports.push(first);
    }

    let mut outcome = BTreeMap::new();
    for id in 1..=10u32 {
        let results: Vec<&CriterionResult> = reports.iter().flat_map(|r| r.criterion(id)).collect();
        outcome.insert(id, summarize(&results));
    }
    let diverged: Vec<&str> = identical.iter().filter(|(_, same)| !same).map(|(s, _)| s.as_str()).collect();
    outcome.insert(
        11,
        (
            diverged.is_empty(),
            if diverged.is_empty() {
                format!("{} suites rerun identically", identical.len())
            } else {
                format!("suites differ on rerun: {}", diverged.join(", "))
            },
        ),
    );

    for (&id, (pass, detail)) in &outcome {
        println!("{}", line(id, *pass, detail));
    }
    for r in &reports {
        for c in r.criterion(rwmax::harness::suites::SUPPLEMENTARY) {
            println!("supplementary [{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }

    let red: Vec<u32> = outcome.iter().filter(|(_, (pass, _))| !pass).map(|(&id, _)| id).collect();
    assert_eq!(red, KNOWN_RED, "failing criteria differ from the documented set");
}
