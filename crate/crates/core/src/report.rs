//! Aggregation of per-constraint results into a validation report, and its
//! text and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Severity, Violation};
use crate::pattern::PatternCode;

/// Violations kept per constraint and file; the rest are counted.
pub const VIOLATION_CAP: usize = 1000;

/// The outcome of one constraint on one file, before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResult {
    pub constraint_id: String,
    pub pattern: Option<PatternCode>,
    pub severity: Severity,
    /// The constraint's gate was false; it was not evaluated.
    pub skipped: bool,
    pub violations: Vec<Violation>,
}

/// Everything evaluated against one input file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileResult {
    pub path: String,
    pub notes: Vec<String>,
    pub results: Vec<ConstraintResult>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub constraint_id: String,
    pub omitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub path: String,
    pub constraints_evaluated: usize,
    pub passed: usize,
    pub failed: usize,
    pub warnings: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truncated: Vec<Truncation>,
    pub elapsed_ms: f64,
}

/// A check over the set of input files rather than one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSetResult {
    pub constraint_id: String,
    pub severity: Severity,
    pub matched: usize,
    pub passed: bool,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub evaluated: usize,
    pub passed: usize,
    pub failed: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: String,
    pub generated_at: String,
    pub totals: Totals,
    pub files: Vec<FileReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub file_set: Vec<FileSetResult>,
}

impl ValidationReport {
    /// Whether any error-severity check failed (per file or file set).
    pub fn has_failures(&self) -> bool {
        self.totals.failed > 0 || self.file_set.iter().any(|f| !f.passed && f.severity == Severity::Error)
    }

    /// Error-severity violations across all files.
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.files
            .iter()
            .flat_map(|f| &f.violations)
            .filter(|v| v.severity == Severity::Error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }
}

fn sort_key(v: &Violation) -> impl Ord + '_ {
    (&v.file, &v.constraint_id, &v.locus, &v.offending, &v.message)
}

/// Builds a report. Files and violations are ordered by (file, constraint
/// id, locus) whatever order the results arrive in.
pub fn aggregate(
    spec: &str,
    generated_at: &str,
    mut files: Vec<FileResult>,
    mut file_set: Vec<FileSetResult>,
) -> ValidationReport {
    files.sort_by(|a, b| a.path.cmp(&b.path));
    file_set.sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
    let mut totals = Totals::default();
    let mut out = Vec::with_capacity(files.len());
    for mut file in files {
        file.results.sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
        let mut report = FileReport {
            path: file.path.clone(),
            constraints_evaluated: 0,
            passed: 0,
            failed: 0,
            warnings: file.notes.len(),
            skipped: Vec::new(),
            notes: file.notes,
            violations: Vec::new(),
            truncated: Vec::new(),
            elapsed_ms: file.elapsed_ms,
        };
        for mut r in file.results {
            if r.skipped {
                report.skipped.push(r.constraint_id);
                continue;
            }
            report.constraints_evaluated += 1;
            let errors = r.violations.iter().filter(|v| v.severity == Severity::Error).count();
            report.warnings += r.violations.len() - errors;
            if errors > 0 {
                report.failed += 1;
            } else {
                report.passed += 1;
            }
            r.violations.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
            if r.violations.len() > VIOLATION_CAP {
                report.truncated.push(Truncation {
                    constraint_id: r.constraint_id.clone(),
                    omitted: r.violations.len() - VIOLATION_CAP,
                });
                r.violations.truncate(VIOLATION_CAP);
            }
            report.violations.extend(r.violations);
        }
        report.violations.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
        totals.evaluated += report.constraints_evaluated;
        totals.passed += report.passed;
        totals.failed += report.failed;
        totals.warnings += report.warnings;
        out.push(report);
    }
    ValidationReport {
        spec: spec.to_string(),
        generated_at: generated_at.to_string(),
        totals,
        files: out,
        file_set,
    }
}

/// One line per violation: `FILE:ROW:COL  [id/pattern]  message (value=...)`.
pub fn violation_line(v: &Violation) -> String {
    let tag = match &v.pattern {
        Some(p) => format!("{}/{}", v.constraint_id, p),
        None => v.constraint_id.clone(),
    };
    let mut line = format!("{}  [{}]  {}", v.locator(), tag, v.message);
    if let Some(o) = &v.offending {
        let _ = write!(line, " (value={o})");
    }
    if v.severity == Severity::Warning {
        line.push_str(" [warning]");
    }
    line
}

pub fn render_text(report: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "spec: {}", report.spec);
    for f in &report.files {
        let _ = writeln!(
            out,
            "== {}  ({} evaluated, {} passed, {} failed, {} warnings)",
            f.path, f.constraints_evaluated, f.passed, f.failed, f.warnings
        );
        for v in &f.violations {
            let _ = writeln!(out, "{}", violation_line(v));
        }
        for t in &f.truncated {
            let _ = writeln!(out, "  +{} more for {}", t.omitted, t.constraint_id);
        }
        for s in &f.skipped {
            let _ = writeln!(out, "  skipped (gate false): {s}");
        }
        for n in &f.notes {
            let _ = writeln!(out, "  warning: {n}");
        }
    }
    if !report.file_set.is_empty() {
        out.push_str("== file set\n");
        for c in &report.file_set {
            let status = if c.passed { "ok" } else { "FAILED" };
            let _ = writeln!(out, "[{}]  {status}: {}", c.constraint_id, c.message);
        }
    }
    let t = &report.totals;
    let _ = writeln!(
        out,
        "totals: {} evaluated, {} passed, {} failed, {} warnings",
        t.evaluated, t.passed, t.failed, t.warnings
    );
    out
}
