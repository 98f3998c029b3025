//! Evidence rows, lemma reports and the report bundle writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Acceptance rule attached to one evidence row.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Check {
    /// `value < bound`.
    Below { bound: f64 },
    /// `value > bound`.
    Above { bound: f64 },
    /// `|value - target| <= tol`.
    Near { target: f64, tol: f64 },
    /// `|value / target - 1| <= tol`.
    Relative { target: f64, tol: f64 },
    /// Recorded without a verdict.
    Info,
}

impl Check {
    pub fn accepts(&self, value: f64) -> bool {
        match *self {
            Check::Below { bound } => value < bound,
            Check::Above { bound } => value > bound,
            Check::Near { target, tol } => (value - target).abs() <= tol,
            Check::Relative { target, tol } => (value / target - 1.0).abs() <= tol,
            Check::Info => true,
        }
    }

    fn describe(&self) -> String {
        match *self {
            Check::Below { bound } => format!("< {bound:.6e}"),
            Check::Above { bound } => format!("> {bound:.6e}"),
            Check::Near { target, tol } => format!("{target:.6e} ± {tol:.1e}"),
            Check::Relative { target, tol } => format!("{target:.6e} (rel {tol:.1e})"),
            Check::Info => "info".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EvidenceRow {
    pub label: String,
    pub value: f64,
    pub check: Check,
    pub passed: bool,
}

impl EvidenceRow {
    pub fn new(label: impl Into<String>, value: f64, check: Check) -> Self {
        let passed = check.accepts(value);
        EvidenceRow { label: label.into(), value, check, passed }
    }
}

/// Numeric table emitted as CSV next to the report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: path.display().to_string(), msg: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.12e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub id: String,
    pub title: String,
    pub status: Status,
    pub rows: Vec<EvidenceRow>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Set when the check could not run; the report then fails.
    pub error: Option<String>,
    #[serde(skip)]
    pub cause: Option<Error>,
    #[serde(skip)]
    pub runtime_s: f64,
}

impl LemmaReport {
    pub fn new(id: &str, title: &str) -> Self {
        LemmaReport {
            id: id.into(),
            title: title.into(),
            status: Status::Fail,
            rows: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            error: None,
            cause: None,
            runtime_s: 0.0,
        }
    }

    pub fn row(&mut self, label: impl Into<String>, value: f64, check: Check) -> bool {
        let r = EvidenceRow::new(label, value, check);
        let ok = r.passed;
        self.rows.push(r);
        ok
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// A report with no rows cannot pass; one made only of `Info` rows is
    /// informational.
    pub fn finish(mut self) -> Self {
        self.status = if self.error.is_some() || self.rows.is_empty() || self.rows.iter().any(|r| !r.passed) {
            Status::Fail
        } else if self.rows.iter().all(|r| r.check == Check::Info) {
            Status::Informational
        } else {
            Status::Pass
        };
        self
    }

    pub fn failed(id: &str, title: &str, err: &Error) -> Self {
        let mut r = LemmaReport::new(id, title);
        r.error = Some(err.to_string());
        r.cause = Some(err.clone());
        r.finish()
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Trend of a sequence that should tend to zero: whether every step stays
/// within `jitter` (relative) of the running minimum, and the ratio of the
/// last value to the first. An all-zero sequence counts as monotone with
/// ratio 0.
pub fn limit_trend(values: &[f64], jitter: f64) -> (bool, f64) {
    let Some(&first) = values.first() else {
        return (true, 0.0);
    };
    if first == 0.0 {
        let zero = values.iter().all(|v| *v == 0.0);
        return (zero, if zero { 0.0 } else { f64::INFINITY });
    }
    let mut low = first.abs();
    let mut monotone = true;
    for &v in &values[1..] {
        if v.abs() > low * (1.0 + jitter) {
            monotone = false;
        }
        low = low.min(v.abs());
    }
    (monotone, values[values.len() - 1].abs() / first.abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub config: serde_json::Value,
    pub reports: Vec<LemmaReport>,
    pub all_passed: bool,
}

impl ReportBundle {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Verification report\n");
        let _ = writeln!(s, "seed: {}, overall: {}\n", self.seed, if self.all_passed { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "| check | status | rows | runtime (s) |\n|---|---|---|---|");
        for r in &self.reports {
            let _ = writeln!(s, "| {} | {:?} | {} | {:.2} |", r.id, r.status, r.rows.len(), r.runtime_s);
        }
        for r in &self.reports {
            let _ = writeln!(s, "\n## {}: {}\n", r.id, r.title);
            if let Some(e) = &r.error {
                let _ = writeln!(s, "error: {e}\n");
            }
            if !r.rows.is_empty() {
                let _ = writeln!(s, "| evidence | value | rule | ok |\n|---|---|---|---|");
                for row in &r.rows {
                    let _ = writeln!(
                        s,
                        "| {} | {:.6e} | {} | {} |",
                        row.label,
                        row.value,
                        row.check.describe(),
                        if row.passed { "yes" } else { "NO" }
                    );
                }
            }
            for n in &r.notes {
                let _ = writeln!(s, "\n- {n}");
            }
        }
        s
    }

    /// Writes `report.json`, `report.md` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), msg: e.to_string() };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json()?).map_err(|e| io(&json, e))?;
        let md = dir.join("report.md");
        std::fs::write(&md, self.to_markdown()).map_err(|e| io(&md, e))?;
        for r in &self.reports {
            for t in &r.tables {
                t.write_csv(&dir.join(format!("{}_{}.csv", r.id, t.name)))?;
            }
        }
        Ok(())
    }
}
