use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::context::Artifact;
use crate::model::document::DocPath;
use crate::pattern::PatternCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    #[default]
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Where a violation sits inside the validated artifact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Locus {
    File,
    Column { column: String },
    Row { row: usize },
    Cell { row: usize, column: String },
    Path { path: String },
}

impl Locus {
    pub fn cell(row: usize, column: impl Into<String>) -> Self {
        Locus::Cell {
            row,
            column: column.into(),
        }
    }

    pub fn column(column: impl Into<String>) -> Self {
        Locus::Column { column: column.into() }
    }

    pub fn path(path: &DocPath) -> Self {
        Locus::Path { path: path.to_string() }
    }

    /// Whether the locus can be re-indexed into `artifact`.
    pub fn resolves_in(&self, artifact: &Artifact) -> bool {
        match (self, artifact) {
            (Locus::File, _) => true,
            (Locus::Column { column }, Artifact::Table(t)) => t.has_column(column),
            (Locus::Row { row }, Artifact::Table(t)) => *row < t.row_count(),
            (Locus::Cell { row, column }, Artifact::Table(t)) => {
                *row < t.row_count() && t.has_column(column)
            }
            (Locus::Path { path }, Artifact::Document(d)) => path
                .parse::<DocPath>()
                .ok()
                .and_then(|p| d.resolve(&p))
                .is_some(),
            _ => false,
        }
    }
}

/// One raw finding from a check, before it is stamped with the constraint
/// and file it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub locus: Locus,
    pub offending: Option<String>,
    pub message: String,
}

impl Finding {
    pub fn new(locus: Locus, offending: Option<String>, message: impl Into<String>) -> Self {
        Self {
            locus,
            offending,
            message: message.into(),
        }
    }
}

/// A counterexample: the constraint, the exact locus, and the offending value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint_id: String,
    pub pattern: Option<PatternCode>,
    pub severity: Severity,
    pub file: String,
    pub locus: Locus,
    pub offending: Option<String>,
    pub message: String,
}

impl Violation {
    /// Text locator `FILE:ROW:COL`, with `*` for an unspecified part.
    pub fn locator(&self) -> String {
        match &self.locus {
            Locus::File => self.file.clone(),
            Locus::Column { column } => format!("{}:*:{}", self.file, column),
            Locus::Row { row } => format!("{}:{}:*", self.file, row),
            Locus::Cell { row, column } => format!("{}:{}:{}", self.file, row, column),
            Locus::Path { path } => format!("{}:/{}", self.file, path),
        }
    }
}
