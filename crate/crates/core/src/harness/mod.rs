//! Replication driver, reports, the work-unit table and the validation
//! suites.
//!
//! Replication `i` of a run seeded with `s` always uses
//! [`SimRng::stream`]`(s, i)` and its own copy of the sampler, and results
//! are collected in index order, so reports depend only on the config and
//! the seed.

pub mod oracles;
pub mod stats;
pub mod suites;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryParams, DEFAULT_SERIES_TOL};
use crate::error::{Error, Result};
use crate::increments::{IncrementLaw, LawName};
use crate::max_sampler::{MaxSampler, RatioKind, RatioMonitor, RatioStats, DEFAULT_STEP_CAP};
use crate::queue::{ArrivalProcess, QueueModel, DEFAULT_PATH_CAP};
use crate::rng::SimRng;
use crate::two_sided::TwoSidedSampler;

pub use stats::TestStat;
pub use suites::{run_suite, CriterionResult, Suite, SuiteReport};

pub const REPORT_SCHEMA: &str = "rwmax.report.v1";
pub const TUNE_SCHEMA: &str = "rwmax.tune.v1";
pub const GOF_LEVEL: f64 = 0.01;
const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    MaxAlpha,
    Departures,
    TwoSided,
}

/// Every model parameter the samplers accept. Keys of the config file are
/// the field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub alpha: f64,
    pub a: f64,
    pub law: LawName,
    pub beta: f64,
    pub h: f64,
    /// Mean interarrival time of the Poisson arrivals.
    pub mu: f64,
    pub path_cap: u64,
    pub step_cap: u64,
    pub series_tol: f64,
    /// Absolute walk index the two-sided path is extended to.
    pub horizon: u64,
    pub emit_paths: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            alpha: 0.9,
            a: 0.4,
            law: LawName::CenteredExponential,
            beta: 0.8,
            h: 1.0,
            mu: 1.0,
            path_cap: DEFAULT_PATH_CAP,
            step_cap: DEFAULT_STEP_CAP,
            series_tol: DEFAULT_SERIES_TOL,
            horizon: 0,
            emit_paths: false,
        }
    }
}

pub const CONFIG_KEYS: [&str; 11] =
    ["alpha", "a", "law", "beta", "h", "mu", "path_cap", "step_cap", "series_tol", "horizon", "emit_paths"];

impl SimConfig {
    /// Set one field from its textual value. Dashes in keys are accepted as
    /// underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got '{value}'"));
        let f = || value.parse::<f64>().map_err(|_| bad("a number"));
        let u = || value.parse::<u64>().map_err(|_| bad("a nonnegative integer"));
        match key.replace('-', "_").as_str() {
            "alpha" => self.alpha = f()?,
            "a" => self.a = f()?,
            "law" => self.law = IncrementLaw::from_name(value)?.name(),
            "beta" => self.beta = f()?,
            "h" => self.h = f()?,
            "mu" => self.mu = f()?,
            "path_cap" => self.path_cap = u()?,
            "step_cap" => self.step_cap = u()?,
            "series_tol" => self.series_tol = f()?,
            "horizon" => self.horizon = u()?,
            "emit_paths" => self.emit_paths = value.parse().map_err(|_| bad("true or false"))?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        format!(
            "alpha = {:?}\na = {:?}\nlaw = {}\nbeta = {:?}\nh = {:?}\nmu = {:?}\npath_cap = {}\nstep_cap = {}\nseries_tol = {:e}\nhorizon = {}\nemit_paths = {}\n",
            self.alpha,
            self.a,
            self.law.as_str(),
            self.beta,
            self.h,
            self.mu,
            self.path_cap,
            self.step_cap,
            self.series_tol,
            self.horizon,
            self.emit_paths
        )
    }

    pub fn increment_law(&self) -> Result<IncrementLaw> {
        IncrementLaw::from_name(self.law.as_str())
    }

    pub fn boundary(&self) -> Result<BoundaryParams> {
        BoundaryParams::with_tolerance(&self.increment_law()?, self.alpha, self.a, self.series_tol)
    }

    pub fn queue_model(&self) -> Result<QueueModel> {
        let mut m = QueueModel::new(ArrivalProcess::Poisson { mean: self.mu }, self.alpha, self.beta, self.h)?;
        m.a = self.a;
        m.path_cap = self.path_cap;
        m.validate()?;
        Ok(m)
    }
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are
/// ignored, later keys win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunOutcome {
    MaxAlpha {
        m_alpha: f64,
        argmax: u64,
        kappa: u64,
        gamma: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        path: Option<Vec<f64>>,
    },
    Departures {
        xi1: u64,
        xi2: u64,
        departures: Vec<f64>,
    },
    TwoSided {
        xi1: u64,
        kappa: u64,
        gamma: u64,
        last_record: u64,
    },
    Capped {
        error: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    pub seed: u64,
    /// Stream id within the seed.
    pub stream: u64,
    pub work_units: u64,
    pub outcome: RunOutcome,
}

impl RunRecord {
    /// The scalar summarized in the report: `M_alpha`, the departure count,
    /// or `Xi_1`.
    pub fn value(&self) -> Option<f64> {
        match &self.outcome {
            RunOutcome::MaxAlpha { m_alpha, .. } => Some(*m_alpha),
            RunOutcome::Departures { departures, .. } => Some(departures.len() as f64),
            RunOutcome::TwoSided { xi1, .. } => Some(*xi1 as f64),
            RunOutcome::Capped { .. } => None,
        }
    }

    pub fn kappa(&self) -> Option<u64> {
        match &self.outcome {
            RunOutcome::MaxAlpha { kappa, .. } | RunOutcome::TwoSided { kappa, .. } => Some(*kappa),
            _ => None,
        }
    }

    pub fn is_capped(&self) -> bool {
        matches!(self.outcome, RunOutcome::Capped { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub kind: RatioKind,
    pub bound: f64,
    #[serde(flatten)]
    pub stats: RatioStats,
}

pub fn ratio_summary(m: &RatioMonitor) -> Vec<RatioSummary> {
    RatioKind::ALL
        .iter()
        .map(|&kind| RatioSummary { kind, bound: kind.bound(), stats: m.get(kind) })
        .filter(|r| r.stats.evaluations > 0)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub completed: u64,
    pub capped: u64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub quantiles: Vec<Quantile>,
    pub mean_work_units: Option<f64>,
    pub max_work_units: u64,
    pub ratios: Vec<RatioSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestResult {
    fn from_stat(name: &str, r: Result<TestStat>) -> Self {
        match r {
            Ok(t) => TestResult {
                name: name.into(),
                statistic: Some(t.statistic),
                p_value: Some(t.p_value),
                pass: t.p_value > GOF_LEVEL,
                note: None,
            },
            Err(e) => TestResult { name: name.into(), statistic: None, p_value: None, pass: false, note: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub schema: String,
    pub task: Task,
    pub config: SimConfig,
    pub seed: u64,
    pub n_runs: u64,
    pub runs: Vec<RunRecord>,
    pub summary: Summary,
    pub tests: Vec<TestResult>,
}

/// One line of a report in JSON-lines form.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ReportLine {
    Header { schema: String, task: Task, config: SimConfig, seed: u64, n_runs: u64 },
    Run(RunRecord),
    Summary { summary: Summary, tests: Vec<TestResult> },
}

impl ReplicationReport {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        let mut push = |line: ReportLine| {
            out.push_str(&serde_json::to_string(&line).expect("report serializes"));
            out.push('\n');
        };
        push(ReportLine::Header {
            schema: self.schema.clone(),
            task: self.task,
            config: self.config.clone(),
            seed: self.seed,
            n_runs: self.n_runs,
        });
        for r in &self.runs {
            push(ReportLine::Run(r.clone()));
        }
        push(ReportLine::Summary { summary: self.summary.clone(), tests: self.tests.clone() });
        out
    }

    /// Flat per-run table.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("run,seed,stream,value,kappa,work_units,capped\n");
        for r in &self.runs {
            let value = r.value().map_or(String::new(), |v| format!("{v:?}"));
            let kappa = r.kappa().map_or(String::new(), |k| k.to_string());
            let _ = writeln!(out, "{},{},{},{value},{kappa},{},{}", r.run, r.seed, r.stream, r.work_units, r.is_capped());
        }
        out
    }

    /// `run,index,departure` rows for departure reports.
    pub fn departures_csv(&self) -> String {
        let mut out = format!("{}\n", crate::queue::DEPARTURES_CSV_HEADER);
        for r in &self.runs {
            if let RunOutcome::Departures { departures, .. } = &r.outcome {
                for (i, d) in departures.iter().enumerate() {
                    let _ = writeln!(out, "{},{i},{d:?}", r.run);
                }
            }
        }
        out
    }
}

fn summarize(runs: &[RunRecord], monitor: &RatioMonitor) -> Summary {
    let mut values: Vec<f64> = runs.iter().filter_map(RunRecord::value).collect();
    let completed = values.len() as u64;
    let done: Vec<&RunRecord> = runs.iter().filter(|r| !r.is_capped()).collect();
    let mut s = Summary {
        completed,
        capped: runs.len() as u64 - completed,
        max_work_units: runs.iter().map(|r| r.work_units).max().unwrap_or(0),
        ratios: ratio_summary(monitor),
        ..Summary::default()
    };
    if values.is_empty() {
        return s;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    values.sort_by(f64::total_cmp);
    s.mean = Some(mean);
    s.sd = Some(var.sqrt());
    s.quantiles = QUANTILES
        .iter()
        .map(|&p| Quantile { p, value: values[((p * (n - 1.0)).round() as usize).min(values.len() - 1)] })
        .collect();
    s.mean_work_units = Some(done.iter().map(|r| r.work_units as f64).sum::<f64>() / n);
    s
}

fn run_one(
    task: Task,
    config: &SimConfig,
    max: &Option<MaxSampler>,
    two: &Option<TwoSidedSampler>,
    queue: &Option<(QueueModel, TwoSidedSampler)>,
    seed: u64,
    run: u64,
) -> (RunRecord, RatioMonitor) {
    let mut rng = SimRng::stream(seed, run);
    let (work_units, outcome, monitor) = match task {
        Task::MaxAlpha => {
            let mut s = max.clone().expect("sampler built");
            match s.sample(&mut rng) {
                Ok(m) => {
                    let path = config.emit_paths.then(|| m.path.prefix_sums.clone());
                    let o = RunOutcome::MaxAlpha { m_alpha: m.m_alpha, argmax: m.argmax, kappa: m.kappa, gamma: m.gamma, path };
                    (m.work_units, o, s.monitor().clone())
                }
                Err(e) => (s.work_units(), RunOutcome::Capped { error: e.to_string() }, s.monitor().clone()),
            }
        }
        Task::TwoSided => {
            let mut s = two.clone().expect("sampler built");
            match s.sample(&mut rng, config.horizon) {
                Ok(o) => {
                    let last_record = o.last_record();
                    let out = RunOutcome::TwoSided { xi1: o.xi1, kappa: o.kappa, gamma: o.gamma, last_record };
                    (o.work_units, out, s.monitor().clone())
                }
                Err(e) => (s.work_units(), RunOutcome::Capped { error: e.to_string() }, s.monitor().clone()),
            }
        }
        Task::Departures => {
            let (m, arrivals) = queue.as_ref().expect("model built");
            match m.sample_departures_with(arrivals, &mut rng) {
                Ok(d) => {
                    let o = RunOutcome::Departures { xi1: d.xi1, xi2: d.xi2, departures: d.departures };
                    (d.work_units, o, RatioMonitor::default())
                }
                Err(e) => (0, RunOutcome::Capped { error: e.to_string() }, RatioMonitor::default()),
            }
        }
    };
    (RunRecord { run, seed, stream: run, work_units, outcome }, monitor)
}

/// `n_runs` independent replications on streams `0..n_runs` of `seed`.
/// Runs that hit a path cap are kept as capped records and excluded from
/// the aggregates.
pub fn run_replications(task: Task, config: &SimConfig, n_runs: u64, seed: u64) -> Result<ReplicationReport> {
    let (mut max, mut two, mut queue) = (None, None, None);
    match task {
        Task::MaxAlpha => {
            max = Some(MaxSampler::new(config.boundary()?, config.increment_law()?).with_step_cap(config.step_cap))
        }
        Task::TwoSided => {
            two = Some(TwoSidedSampler::new(config.boundary()?, config.increment_law()?).with_step_cap(config.step_cap))
        }
        Task::Departures => {
            let m = config.queue_model()?;
            let arrivals = m.arrival_sampler()?;
            queue = Some((m, arrivals))
        }
    }
    let results: Vec<(RunRecord, RatioMonitor)> =
        (0..n_runs).into_par_iter().map(|i| run_one(task, config, &max, &two, &queue, seed, i)).collect();
    let mut monitor = RatioMonitor::default();
    let mut runs = Vec::with_capacity(results.len());
    for (r, m) in results {
        monitor.merge(&m);
        runs.push(r);
    }
    let summary = summarize(&runs, &monitor);
    let mut tests = Vec::new();
    if summary.completed > 0 {
        match task {
            Task::Departures => {
                let counts: Vec<u64> = runs.iter().filter_map(|r| r.value()).map(|v| v as u64).collect();
                let rate = config.h / config.mu;
                tests.push(TestResult::from_stat("departure-count-poisson", stats::chi_square_gof_poisson(&counts, rate)));
            }
            Task::MaxAlpha | Task::TwoSided => {
                let kappas: Vec<u64> = runs.iter().filter_map(RunRecord::kappa).collect();
                let r = stats::chi_square_gof_geometric(&kappas).map(|(t, _)| t);
                tests.push(TestResult::from_stat("kappa-geometric", r));
            }
        }
    }
    Ok(ReplicationReport { schema: REPORT_SCHEMA.into(), task, config: config.clone(), seed, n_runs, runs, summary, tests })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneCell {
    pub alpha: f64,
    pub a: f64,
    pub runs: u64,
    pub capped: u64,
    pub mean_work_units: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneTable {
    pub schema: String,
    pub law: LawName,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub a_values: Vec<f64>,
    /// Row-major over `a_values`, then `alphas`.
    pub cells: Vec<TuneCell>,
}

impl TuneTable {
    pub fn cell(&self, alpha: f64, a: f64) -> Option<&TuneCell> {
        self.cells.iter().find(|c| c.alpha == alpha && c.a == a)
    }

    /// Mean work down the column for `alpha`, in the order of `a_values`.
    pub fn column(&self, alpha: f64) -> Vec<Option<f64>> {
        self.a_values.iter().map(|&a| self.cell(alpha, a).and_then(|c| c.mean_work_units)).collect()
    }

    /// Adjacent pairs in the column for `alpha` where the mean work does not
    /// strictly decrease as `a` grows. Missing cells count as inversions.
    pub fn column_inversions(&self, alpha: f64) -> usize {
        self.column(alpha)
            .windows(2)
            .filter(|w| match (w[0], w[1]) {
                (Some(x), Some(y)) => y >= x,
                _ => true,
            })
            .count()
    }

    /// Grid with one row per `a` and one column per `alpha`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a");
        for al in &self.alphas {
            let _ = write!(out, ",alpha={al}");
        }
        out.push('\n');
        for &a in &self.a_values {
            let _ = write!(out, "{a}");
            for &al in &self.alphas {
                let v = self.cell(al, a).and_then(|c| c.mean_work_units);
                let _ = write!(out, ",{}", v.map_or(String::new(), |v| format!("{v:.2}")));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json_lines(&self) -> String {
        self.cells.iter().map(|c| serde_json::to_string(c).expect("cell serializes") + "\n").collect()
    }
}

/// Mean work units per returned `M_alpha` sample over the grid. Every cell
/// reuses `seed`, so a one-cell grid reproduces [`run_replications`].
pub fn tune_table(alphas: &[f64], a_values: &[f64], base: &SimConfig, n_runs: u64, seed: u64) -> Result<TuneTable> {
    let mut cells = Vec::new();
    for &a in a_values {
        for &alpha in alphas {
            let cfg = SimConfig { alpha, a, emit_paths: false, ..base.clone() };
            let rep = run_replications(Task::MaxAlpha, &cfg, n_runs, seed)?;
            cells.push(TuneCell {
                alpha,
                a,
                runs: n_runs,
                capped: rep.summary.capped,
                mean_work_units: rep.summary.mean_work_units,
            });
        }
    }
    Ok(TuneTable {
        schema: TUNE_SCHEMA.into(),
        law: base.law,
        seed,
        alphas: alphas.to_vec(),
        a_values: a_values.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = SimConfig { alpha: 0.85, law: LawName::StandardNormal, path_cap: 77, ..SimConfig::default() };
        c.emit_paths = true;
        let mut back = SimConfig::default();
        for (k, v) in parse_kv(&c.to_kv()).unwrap() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, c);
    }

    #[test]
    fn kv_rejects_unknown_and_malformed() {
        assert!(parse_kv("alpha 0.9").is_err());
        assert!(SimConfig::default().set("gamma", "1").is_err());
        assert!(SimConfig::default().set("alpha", "x").is_err());
        let kv = parse_kv("# c\n\nalpha = 0.8 # trailing\nalpha=0.85\n").unwrap();
        assert_eq!(kv["alpha"], "0.85");
    }

    #[test]
    fn zero_runs_echo_config() {
        let c = SimConfig::default();
        let r = run_replications(Task::MaxAlpha, &c, 0, 1).unwrap();
        assert_eq!((r.n_runs, r.runs.len(), r.summary.completed), (0, 0, 0));
        assert_eq!(r.config, c);
        assert!(r.tests.is_empty());
    }

    #[test]
    fn invalid_config_errors() {
        let c = SimConfig { a: 0.7, ..SimConfig::default() };
        assert!(run_replications(Task::MaxAlpha, &c, 3, 1).is_err());
        let c = SimConfig { beta: 0.5, ..SimConfig::default() };
        assert!(run_replications(Task::Departures, &c, 3, 1).is_err());
    }

    #[test]
    fn same_seed_same_report() {
        let c = SimConfig::default();
        let a = run_replications(Task::MaxAlpha, &c, 20, 9).unwrap().to_json_lines();
        let b = run_replications(Task::MaxAlpha, &c, 20, 9).unwrap().to_json_lines();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 22);
    }

    #[test]
    fn single_cell_tune_matches_replications() {
        let c = SimConfig { alpha: 0.95, a: 0.45, ..SimConfig::default() };
        let t = tune_table(&[0.95], &[0.45], &c, 10, 4).unwrap();
        let r = run_replications(Task::MaxAlpha, &c, 10, 4).unwrap();
        assert_eq!(t.cells[0].mean_work_units, r.summary.mean_work_units);
    }

    #[test]
    fn inversions_count_ties_and_gaps() {
        let mk = |a, w| TuneCell { alpha: 0.8, a, runs: 1, capped: 0, mean_work_units: w };
        let t = TuneTable {
            schema: TUNE_SCHEMA.into(),
            law: LawName::CenteredExponential,
            seed: 0,
            alphas: vec![0.8],
            a_values: vec![0.1, 0.2, 0.3, 0.4],
            cells: vec![mk(0.1, Some(5.0)), mk(0.2, Some(5.0)), mk(0.3, Some(1.0)), mk(0.4, None)],
        };
        assert_eq!(t.column_inversions(0.8), 2);
        assert!(t.to_csv().starts_with("a,alpha=0.8\n0.1,5.00\n"));
    }
}
