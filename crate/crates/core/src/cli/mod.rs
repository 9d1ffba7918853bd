//! Experiment registry behind the `qlattice` binary: named, parameterized,
//! reproducible runs with CSV tables and a JSON summary.

mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Error;
use crate::io::{create, write_table};

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.json";

/// Why a run did not produce a report.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::InvalidScaling(_)
            | Error::InvalidSampling(_)
            | Error::DegenerateGrid(_)
            | Error::UnsupportedPotential(_)
            | Error::InvalidQTensor { .. }
            | Error::InvalidDirector { .. }
            | Error::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other),
        }
    }
}

/// One JSON configuration document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        Self { experiment: experiment.into(), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Result table; every table names the operation that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub source: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, source: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        Value::Number(n) => match n.as_f64() {
                            Some(x) if n.is_f64() => x.to_string(),
                            _ => n.to_string(),
                        },
                        other => other.to_string(),
                    })
                    .collect()
            })
            .collect()
    }
}

/// A declared tolerance and whether the run met it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub source: String,
    pub value: f64,
    pub comparison: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, source: &str, value: f64, tolerance: f64) -> Self {
        Self::build(name, source, value, "<=", tolerance, value <= tolerance)
    }

    pub fn at_least(name: &str, source: &str, value: f64, tolerance: f64) -> Self {
        Self::build(name, source, value, ">=", tolerance, value >= tolerance)
    }

    pub fn equals(name: &str, source: &str, value: f64, expected: f64) -> Self {
        Self::build(name, source, value, "==", expected, value == expected)
    }

    fn build(name: &str, source: &str, value: f64, cmp: &str, tolerance: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            value,
            comparison: cmp.into(),
            tolerance,
            pass: pass && value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub experiment: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Parameters of one experiment.
trait Experiment: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;
    const SUMMARY: &'static str;
    const STOCHASTIC: bool;
    fn run(&self) -> crate::Result<Outcome>;
    fn seed(&self) -> Option<u64> {
        None
    }
}

type Runner = fn(Value) -> Result<(Value, Option<u64>, Outcome), CliError>;

#[derive(Clone, Copy)]
struct Entry {
    name: &'static str,
    summary: &'static str,
    stochastic: bool,
    defaults: fn() -> Value,
    run: Runner,
}

fn entry<E: Experiment>() -> Entry {
    fn defaults<E: Experiment>() -> Value {
        serde_json::to_value(E::default()).expect("parameters serialize")
    }
    fn run<E: Experiment>(v: Value) -> Result<(Value, Option<u64>, Outcome), CliError> {
        let p: E = serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
        let echo = serde_json::to_value(&p).expect("parameters serialize");
        let out = p.run()?;
        Ok((echo, p.seed(), out))
    }
    Entry { name: E::NAME, summary: E::SUMMARY, stochastic: E::STOCHASTIC, defaults: defaults::<E>, run: run::<E> }
}

fn registry() -> [Entry; 9] {
    use experiments::*;
    [
        entry::<Identities>(),
        entry::<EnvelopeOracle>(),
        entry::<Homogenize2d>(),
        entry::<Homogenize3d>(),
        entry::<Gradient>(),
        entry::<Counterexample>(),
        entry::<Oscillation>(),
        entry::<Vortex>(),
        entry::<Prefactor>(),
    ]
}

/// Registry entry as shown by `list`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub stochastic: bool,
    /// Runnable parameter set; stochastic experiments get seed 0.
    pub defaults: Value,
}

pub fn list() -> Vec<ExperimentInfo> {
    registry()
        .iter()
        .map(|e| {
            let mut defaults = (e.defaults)();
            if e.stochastic {
                defaults["seed"] = Value::from(0u64);
            }
            ExperimentInfo { name: e.name, summary: e.summary, stochastic: e.stochastic, defaults }
        })
        .collect()
}

/// Runs a configuration; `seed` overrides any seed in the file.
pub fn run(config: &ExperimentConfig, seed: Option<u64>) -> Result<RunReport, CliError> {
    let e = registry()
        .into_iter()
        .find(|e| e.name == config.experiment)
        .ok_or_else(|| CliError::Config(format!("unknown experiment `{}`", config.experiment)))?;
    let mut params = config.parameters.clone();
    if e.stochastic {
        if let Some(s) = seed {
            params.insert("seed".into(), Value::from(s));
        }
        if !params.get("seed").is_some_and(|v| v.is_u64()) {
            return Err(CliError::Config(format!("experiment `{}` needs an integer seed", e.name)));
        }
    }
    let start = Instant::now();
    let (echo, seed, out) = (e.run)(Value::Object(params))?;
    let pass = out.checks.iter().all(|c| c.pass);
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        experiment: e.name.into(),
        parameters: echo,
        seed,
        tables: out.tables,
        checks: out.checks,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    })
}

/// Writes one CSV per table and the JSON summary into `dir`.
pub fn write_report(report: &mut RunReport, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let mut artifacts = Vec::new();
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_table(create(&path)?, &t.columns, &t.cells())?;
        artifacts.push(path.display().to_string());
    }
    let summary = dir.join(SUMMARY_FILE);
    artifacts.push(summary.display().to_string());
    report.artifacts = artifacts;
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&summary, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", summary.display())))?;
    Ok(())
}
