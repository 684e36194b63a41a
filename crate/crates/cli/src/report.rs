//! Suite reports as CSV and JSON.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checks::{CheckResult, Status};

pub const CSV_HEADER: &str = "check,status,defect,tolerance,seconds,seed,config_digest";

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub results: Vec<CheckResult>,
    pub seed: u64,
    pub config_digest: String,
    pub record_timings: bool,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Scientific notation with 17 significant digits, which round-trips every
/// finite `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Serialize)]
struct JsonRow<'a> {
    check: &'a str,
    status: &'a str,
    defect: String,
    tolerance: String,
    seconds: Option<String>,
    seed: u64,
    config_digest: &'a str,
    detail: &'a str,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    seed: u64,
    config_digest: &'a str,
    all_pass: bool,
    checks: Vec<JsonRow<'a>>,
}

impl SuiteReport {
    fn seconds(&self, r: &CheckResult) -> Option<String> {
        self.record_timings.then(|| format!("{:.3}", r.seconds))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.name,
                r.status.as_str(),
                format_number(r.defect),
                format_number(r.tolerance),
                self.seconds(r).unwrap_or_default(),
                self.seed,
                self.config_digest
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let report = JsonReport {
            seed: self.seed,
            config_digest: &self.config_digest,
            all_pass: self.all_pass(),
            checks: self
                .results
                .iter()
                .map(|r| JsonRow {
                    check: r.name,
                    status: r.status.as_str(),
                    defect: format_number(r.defect),
                    tolerance: format_number(r.tolerance),
                    seconds: self.seconds(r),
                    seed: self.seed,
                    config_digest: &self.config_digest,
                    detail: &r.detail,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write the report in `format` (`csv`, `json` or `both`); returns the paths.
    pub fn emit(&self, dir: &Path, format: &str) -> io::Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        if matches!(format, "csv" | "both") {
            let p = dir.join("report.csv");
            fs::write(&p, self.to_csv())?;
            paths.push(p);
        }
        if matches!(format, "json" | "both") {
            let p = dir.join("report.json");
            fs::write(&p, self.to_json())?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Create the output directory and prove it is writable.
pub fn preflight(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".nilspherical-write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)
}
