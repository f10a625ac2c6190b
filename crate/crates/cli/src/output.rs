use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Numerical(_) => ExitCode::from(3),
            Self::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<sta_core::Error> for CliError {
    fn from(e: sta_core::Error) -> Self {
        match e {
            sta_core::Error::InvalidSpec(_) => Self::Usage(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Settings shared by every run.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub points: usize,
    /// Relative tolerance of the forward checks.
    pub rel_tol: f64,
    /// Skip forward checks and trajectory sampling.
    pub design_only: bool,
}

pub const DEFAULT_POINTS: usize = 2001;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Samples used by the forward checks.
pub const CHECK_SAMPLES: usize = 401;

pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// What a single design run produced.
pub struct Outcome {
    /// File stem for the CSV and report.
    pub stem: String,
    pub method: String,
    /// Resolved inputs, defaults filled in.
    pub spec: Value,
    pub scalars: BTreeMap<String, f64>,
    pub table: Option<Table>,
}

impl Outcome {
    pub fn new(stem: String, method: &str, spec: Value) -> Self {
        Self { stem, method: method.to_string(), spec, scalars: BTreeMap::new(), table: None }
    }

    pub fn put(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.to_string(), value);
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn spec_hash(command: &str, spec: &Value) -> String {
    let canonical = json!({ "command": command, "spec": spec }).to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Provenance<'a> {
    tool: &'a str,
    version: &'a str,
    spec_hash: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport<'a> {
    command: &'a str,
    method: &'a str,
    spec: &'a Value,
    scalar_results: &'a BTreeMap<String, f64>,
    trajectory_file: String,
    provenance: Provenance<'a>,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    timestamp: u64,
}

/// Write `<stem>.csv` and `<stem>.json` under `dir` and return the report.
pub fn write_outcome(dir: &Path, command: &str, outcome: &Outcome) -> CliResult<String> {
    if let Some((name, _)) = outcome.scalars.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::Numerical(format!("scalar result {name} is not finite")));
    }
    fs::create_dir_all(dir)?;
    let csv_name = format!("{}.csv", outcome.stem);
    if let Some(table) = &outcome.table {
        let mut w = csv::Writer::from_path(dir.join(&csv_name))?;
        w.write_record(&table.headers)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|&v| fmt_real(v)))?;
        }
        w.flush()?;
    }
    let report = RunReport {
        command,
        method: &outcome.method,
        spec: &outcome.spec,
        scalar_results: &outcome.scalars,
        trajectory_file: csv_name,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            spec_hash: spec_hash(command, &outcome.spec),
        },
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    fs::write(dir.join(format!("{}.json", outcome.stem)), &text)?;
    Ok(text)
}
