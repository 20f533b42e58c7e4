use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rwmax::harness::{self, SimConfig, Suite, Task, CONFIG_KEYS};

const EXIT_FAILED_VALIDATION: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "rwmax", version, about = "Exact samplers for random-walk maxima and M/Pareto/infinity departures")]
struct Cli {
    /// key = value file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw M_alpha and its path
    SampleMax(SampleMax),
    /// Draw the stationary departure set on [0, h]
    SampleDepartures(SampleDepartures),
    /// Mean work units over an (alpha, a) grid
    Tune(Tune),
    /// Run a validation suite; exits nonzero if any check fails
    Validate(Validate),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines report; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SampleMax {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    emit_paths: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SampleDepartures {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Mean interarrival time
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    path_cap: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Tune {
    /// Comma-separated alpha values
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated a values
    #[arg(long = "as")]
    a_values: Option<String>,
    #[arg(long)]
    law: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Validate {
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines results; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Settings from the config file overlaid with explicit flags.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Settings(BTreeMap::new()));
        };
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Settings(harness::parse_kv(&text).map_err(|e| format!("{}: {e}", path.display()))?))
    }

    fn flag<T: ToString>(&mut self, key: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    fn switch(&mut self, key: &str, on: bool) {
        if on {
            self.0.insert(key.to_string(), "true".into());
        }
    }

    fn common(&mut self, c: &Common) {
        self.flag("runs", &c.runs);
        self.flag("seed", &c.seed);
        self.flag("out", &c.out.as_ref().map(|p| p.display().to_string()));
        self.flag("csv", &c.csv.as_ref().map(|p| p.display().to_string()));
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_u64(&mut self, key: &str, default: u64) -> Result<u64, String> {
        match self.take(key) {
            Some(v) => v.parse().map_err(|_| format!("{key}: expected a nonnegative integer, got '{v}'")),
            None => Ok(default),
        }
    }

    fn take_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, String> {
        match self.take(key) {
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| format!("{key}: '{x}' is not a number")))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    /// Model parameters; every remaining key must be one of them.
    fn into_config(self) -> Result<SimConfig, String> {
        let mut cfg = SimConfig::default();
        for (k, v) in self.0 {
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(format!("unknown or inapplicable setting '{k}'"));
            }
            cfg.set(&k, &v).map_err(|e| e.to_string())?;
        }
        Ok(cfg)
    }
}

fn write_out(path: Option<&str>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{p}: {e}")),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn sample(task: Task, mut s: Settings) -> Result<u8, String> {
    let runs = s.take_u64("runs", 1000)?;
    let seed = s.take_u64("seed", 0)?;
    let out = s.take("out");
    let csv = s.take("csv");
    let cfg = s.into_config()?;
    let report = harness::run_replications(task, &cfg, runs, seed).map_err(|e| e.to_string())?;
    write_out(out.as_deref(), &report.to_json_lines())?;
    if let Some(p) = csv {
        let table = match task {
            Task::Departures => report.departures_csv(),
            _ => report.runs_csv(),
        };
        write_out(Some(&p), &table)?;
    }
    let sm = &report.summary;
    eprintln!(
        "{} completed, {} capped, mean {}, mean work units {}",
        sm.completed,
        sm.capped,
        sm.mean.map_or("-".into(), |m| format!("{m:.6}")),
        sm.mean_work_units.map_or("-".into(), |m| format!("{m:.1}"))
    );
    for t in &report.tests {
        eprintln!("{}: p = {} ({})", t.name, t.p_value.map_or("-".into(), |p| format!("{p:.4}")), if t.pass { "pass" } else { "fail" });
    }
    Ok(0)
}

fn tune(mut s: Settings) -> Result<u8, String> {
    let alphas = s.take_list("alphas", &harness::suites::GRID_ALPHAS)?;
    let a_values = s.take_list("as", &harness::suites::GRID_AS)?;
    let runs = s.take_u64("runs", 200)?;
    let seed = s.take_u64("seed", 0)?;
    let out = s.take("out");
    let csv = s.take("csv");
    let cfg = s.into_config()?;
    let table = harness::tune_table(&alphas, &a_values, &cfg, runs, seed).map_err(|e| e.to_string())?;
    write_out(out.as_deref(), &table.to_json_lines())?;
    match csv {
        Some(p) => write_out(Some(&p), &table.to_csv())?,
        None => eprint!("{}", table.to_csv()),
    }
    Ok(0)
}

fn validate(mut s: Settings) -> Result<u8, String> {
    let name = s.take("suite").ok_or("validate needs --suite {tilting,pmfs,maxdist,poisson}")?;
    let suite = Suite::from_name(&name).map_err(|e| e.to_string())?;
    let seed = s.take_u64("seed", 0)?;
    let out = s.take("out");
    if let Some(k) = s.0.keys().next() {
        return Err(format!("unknown or inapplicable setting '{k}'"));
    }
    let report = harness::run_suite(suite, seed).map_err(|e| e.to_string())?;
    write_out(out.as_deref(), &report.to_json_lines())?;
    for c in &report.criteria {
        eprintln!("[{}] {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
    }
    Ok(if report.passed() { 0 } else { EXIT_FAILED_VALIDATION })
}

fn run(cli: Cli) -> Result<u8, String> {
    let mut s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::SampleMax(c) => {
            s.flag("alpha", &c.alpha);
            s.flag("a", &c.a);
            s.flag("law", &c.law);
            s.switch("emit_paths", c.emit_paths);
            s.common(&c.common);
            sample(Task::MaxAlpha, s)
        }
        Command::SampleDepartures(c) => {
            s.flag("alpha", &c.alpha);
            s.flag("beta", &c.beta);
            s.flag("h", &c.h);
            s.flag("mu", &c.mu);
            s.flag("path_cap", &c.path_cap);
            s.common(&c.common);
            sample(Task::Departures, s)
        }
        Command::Tune(c) => {
            s.flag("alphas", &c.alphas);
            s.flag("as", &c.a_values);
            s.flag("law", &c.law);
            s.common(&c.common);
            tune(s)
        }
        Command::Validate(c) => {
            s.flag("suite", &c.suite);
            s.flag("seed", &c.seed);
            s.flag("out", &c.out.as_ref().map(|p| p.display().to_string()));
            validate(s)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
