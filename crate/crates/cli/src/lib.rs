//! Command-line driver for the verification suites.
//!
//! A run is described by a [`RunConfig`], read from a JSON file and
//! overridden by flags and trailing `key=value` pairs. Exit codes are
//! 0 (all checks pass), 1 (a bound is violated), 2 (bad configuration) and
//! 3 (the requested work is infeasible).

pub mod suites;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use polyrand::{EnvelopeReport, Error};

pub use suites::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    CantorScan,
    Weyl,
    JkCount,
    Ik,
    VinogradovVerify,
    QfDensity,
    QfSandwich,
    QfTail,
    CpTest,
    Stability,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::CantorScan,
        Suite::Weyl,
        Suite::JkCount,
        Suite::Ik,
        Suite::VinogradovVerify,
        Suite::QfDensity,
        Suite::QfSandwich,
        Suite::QfTail,
        Suite::CpTest,
        Suite::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CantorScan => "cantor-scan",
            Suite::Weyl => "weyl",
            Suite::JkCount => "jk-count",
            Suite::Ik => "ik",
            Suite::VinogradovVerify => "vinogradov-verify",
            Suite::QfDensity => "qf-density",
            Suite::QfSandwich => "qf-sandwich",
            Suite::QfTail => "qf-tail",
            Suite::CpTest => "cp-test",
            Suite::Stability => "stability",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub suite: Suite,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    /// Worker threads; all cores when absent. Never changes the output.
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Report destination; stdout when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Suite parameters; see [`suites::defaults`].
    #[serde(default)]
    pub params: Value,
}

impl RunConfig {
    pub fn new(suite: Suite) -> Self {
        RunConfig { suite, seed: 0, format: Format::Csv, jobs: None, out: None, params: Value::Null }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies a `key=value` override to the params; dotted keys address
    /// nested blocks, keys are case-insensitive and values are JSON when they
    /// parse as JSON and strings otherwise.
    pub fn set_param(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got '{assignment}'")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        if self.params.is_null() {
            self.params = Value::Object(Map::new());
        }
        let mut node = &mut self.params;
        let parts: Vec<String> = key.split('.').map(str::to_lowercase).collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("'{key}' descends into a non-object")))?;
            if i + 1 == parts.len() {
                obj.insert(part.clone(), value);
                return Ok(());
            }
            node = obj.entry(part.clone()).or_insert_with(|| Value::Object(Map::new()));
        }
        Err(CliError::Config("empty key".into()))
    }
}

/// Predicted work of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostEstimate {
    pub suite: Suite,
    pub operations: f64,
    pub memory_bytes: f64,
    /// Single-core wall time at a nominal throughput.
    pub seconds: f64,
    pub feasible: bool,
    pub detail: String,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(CostEstimate),
    /// A kernel failed to converge or produced an unusable value.
    Numerical(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Infeasible(c) => write!(
                f,
                "infeasible: {} needs about {:.3e} operations ({:.3e} s, {:.3e} bytes): {}",
                c.suite, c.operations, c.seconds, c.memory_bytes, c.detail
            ),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { what, estimate } => CliError::Infeasible(CostEstimate {
                suite: Suite::JkCount,
                operations: estimate,
                memory_bytes: f64::NAN,
                seconds: estimate / suites::OPS_PER_SECOND,
                feasible: false,
                detail: what,
            }),
            Error::NotConverged(m) => CliError::Numerical(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Violation = 1,
    ConfigError = 2,
    Infeasible = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s.code())
    }
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Config(_) | CliError::Io(_) => Status::ConfigError,
            CliError::Infeasible(_) => Status::Infeasible,
            CliError::Numerical(_) => Status::Violation,
        }
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// Cost estimate for `config`; never runs the kernel.
pub fn dry_run(config: &RunConfig) -> Result<CostEstimate, CliError> {
    suites::estimate(config.suite, &config.params)
}

/// Runs the suite on a pool of `config.jobs` threads. Refuses work whose
/// estimate is infeasible.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let est = dry_run(config)?;
    if !est.feasible {
        return Err(CliError::Infeasible(est));
    }
    pool(config.jobs)?.install(|| suites::execute(config.suite, &config.params, config.seed))
}

pub fn render(report: &EnvelopeReport, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
    }
}

/// Runs `config`, writes the report and returns the exit status. Messages
/// go to stderr; the headline (if any) and, without `out`, the report go to
/// stdout.
pub fn run(config: &RunConfig) -> Status {
    match run_inner(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            e.status()
        }
    }
}

fn run_inner(config: &RunConfig) -> Result<Status, CliError> {
    let outcome = execute(config)?;
    let text = render(&outcome.report, config.format);
    match &config.out {
        Some(path) => std::fs::write(path, &text).map_err(CliError::Io)?,
        None if outcome.headline.is_none() => print!("{text}"),
        None => {}
    }
    if let Some(h) = &outcome.headline {
        println!("{h}");
    }
    let pass = outcome.report.all_pass();
    if !pass {
        eprintln!("{}: bound violated (min {}, max {})", config.suite, outcome.report.summary.min, outcome.report.summary.max);
    }
    Ok(if pass { Status::Pass } else { Status::Violation })
}

/// Text for `--help` listing each suite's default parameters.
pub fn defaults_help() -> String {
    let mut s = String::from(
        "CONFIG FILE (JSON):\n  {\"suite\": \"<name>\", \"seed\": 0, \"format\": \"csv\", \"jobs\": null, \"out\": null, \"params\": {...}}\n\
         Unknown keys are rejected. Trailing KEY=VALUE arguments set params (dotted keys reach nested blocks).\n\n\
         EXIT CODES: 0 pass, 1 bound violation, 2 config error, 3 infeasible.\n\nDEFAULT PARAMS:\n",
    );
    for suite in Suite::ALL {
        s.push_str(&format!("  {suite}: {}\n", suites::defaults(suite)));
    }
    s
}
