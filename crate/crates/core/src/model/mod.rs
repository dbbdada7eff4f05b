//! Shared domain types: cells, tables, documents, the evaluation context
//! and violations.

pub mod cell;
pub mod context;
pub mod document;
pub mod table;
pub mod violation;

pub use cell::{CellValue, ValueType};
pub use context::{Artifact, EvaluationContext, ReferenceEntries, ReferenceTable};
pub use document::{load_document, parse_document, DocNode, DocPath, DocumentTree};
pub use table::{load_tabular, parse_tabular, LoadOptions, TabularDataset};
pub use violation::{Finding, Locus, Severity, Violation};
