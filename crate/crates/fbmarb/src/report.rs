//! Experiment reports and their on-disk form: a JSON report, one CSV per
//! table and a run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = ["H", "eps", "N", "estimate", "se", "lo", "hi", "oracle", "verdict"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Oracle missed by more than the hard-failure threshold.
    Breach,
    /// Reported without an acceptance rule.
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Breach => "breach",
            Verdict::Info => "info",
        }
    }

    /// Grades `estimate` against `oracle` in units of `se`.
    pub fn against_oracle(estimate: f64, se: f64, oracle: f64, se_pass: f64, se_fail: f64) -> Self {
        let miss = (estimate - oracle).abs();
        if miss == 0.0 || miss <= se_pass * se {
            Verdict::Pass
        } else if miss <= se_fail * se {
            Verdict::Fail
        } else {
            Verdict::Breach
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    #[serde(rename = "H")]
    pub h: f64,
    pub eps: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub estimate: f64,
    pub se: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub oracle: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub description: String,
    /// The acceptance rule the verdict column applies.
    pub rule: String,
    pub replicates: usize,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>, description: impl Into<String>, rule: impl Into<String>, replicates: usize) -> Self {
        Self { name: name.into(), description: description.into(), rule: rule.into(), replicates, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.h),
                opt(r.eps),
                r.n.to_string(),
                fmt_f64(r.estimate),
                opt(r.se),
                opt(r.lo),
                opt(r.hi),
                opt(r.oracle),
                r.verdict.as_str().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }
}

/// Shortest representation that parses back to the same value.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// A derived check over several rows, such as a monotone trend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub rule: String,
    pub passed: bool,
    pub detail: String,
}

/// Raw per-replicate wealth, exported on request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub name: String,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    VerdictFailure,
    NumericalFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::VerdictFailure => 3,
            Outcome::NumericalFailure => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Family members dropped before grading, with the reason.
    pub excluded: Vec<String>,
    pub outcome: Outcome,
    pub timing: Timing,
    #[serde(skip)]
    pub samples: Vec<SampleSet>,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, rule: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.rule == rule)
    }

    /// Worst of all row verdicts and checks.
    pub fn grade(tables: &[Table], checks: &[Check]) -> Outcome {
        let verdicts = tables.iter().flat_map(|t| t.rows.iter().map(|r| r.verdict));
        let mut outcome = Outcome::Pass;
        for v in verdicts {
            match v {
                Verdict::Breach => return Outcome::NumericalFailure,
                Verdict::Fail => outcome = Outcome::VerdictFailure,
                Verdict::Pass | Verdict::Info => {}
            }
        }
        if checks.iter().any(|c| !c.passed) {
            outcome = Outcome::VerdictFailure;
        }
        outcome
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: String,
    pub config_checksum: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<PathBuf>,
}

/// File name of a table's CSV.
pub fn csv_name(table: &str) -> String {
    format!("{table}.csv")
}

/// Writes the report, its tables, any exported samples and the manifest
/// into `dir`. Files written before a failure are removed again.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> std::io::Result<RunManifest> {
    let mut files: Vec<(String, String)> = Vec::new();
    files.push(("report.json".into(), report.to_json()));
    for t in &report.tables {
        files.push((csv_name(&t.name), t.to_csv()));
    }
    for s in &report.samples {
        let mut text = String::from("replicate_id,X_T\n");
        for (i, x) in s.values.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", fmt_f64(*x)));
        }
        files.push((format!("wealth_{}.csv", s.name), text));
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        experiment: report.experiment.clone(),
        config_checksum: report.config.checksum(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: report.timing.started_at.clone(),
        finished_at: report.timing.finished_at.clone(),
        files: files.iter().map(|(name, _)| dir.join(name)).collect(),
    };
    files.push(("manifest.json".into(), serde_json::to_string_pretty(&manifest).expect("manifest serializes")));

    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, text) in &files {
        let path = dir.join(name);
        let result = fs::File::create(&path).and_then(|mut f| f.write_all(text.as_bytes()));
        if let Err(e) = result {
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(manifest)
}
