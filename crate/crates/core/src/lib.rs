//! Declarative verification of simulation input files.
//!
//! A [`GuardSpec`] binds constraint kinds to tabular and hierarchical input
//! files. [`validate`] evaluates it and returns a [`ValidationReport`] with
//! one counterexample per offending cell, row, column or document path.
//! Every constraint carries a [`PatternCode`] (`sources.template.target`).

pub mod crossfile;
pub mod engine;
pub mod error;
pub mod hierarchical;
pub mod infer;
pub mod model;
pub mod pattern;
pub mod report;
pub mod spec;
pub mod suggest;
pub mod tabular;

pub use engine::{build_context, evaluate_kind, load_artifact, validate, InputSet, RunError, RunOptions};
pub use error::{EvalError, LoadError, SpecError};
pub use hierarchical::{check_document, check_syntax, CheckMode, NodeSchema, SchemaType};
pub use model::{
    load_document, load_tabular, parse_document, parse_tabular, Artifact, CellValue, DocNode, DocPath, DocumentTree,
    EvaluationContext, Finding, LoadOptions, Locus, ReferenceEntries, ReferenceTable, Severity, TabularDataset,
    ValueType, Violation,
};
pub use pattern::{classify, enumerate_single_source_codes, parse_code, Classification, PatternCode};
pub use report::{aggregate, render_text, ValidationReport};
pub use spec::{ConstraintDecl, ConstraintKind, GuardSpec};
