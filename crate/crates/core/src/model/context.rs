use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::EvalError;
use crate::model::cell::CellValue;
use crate::model::document::{DocNode, DocPath, DocumentTree};
use crate::model::table::TabularDataset;

/// Entries of an external lookup table: a value set or a keyed map
/// (calendar month lengths, for instance).
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceEntries {
    Set(BTreeSet<String>),
    Map(BTreeMap<String, CellValue>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub name: String,
    pub entries: ReferenceEntries,
}

impl ReferenceTable {
    /// Membership: set members, or keys for a map.
    pub fn contains(&self, value: &str) -> bool {
        match &self.entries {
            ReferenceEntries::Set(s) => s.contains(value),
            ReferenceEntries::Map(m) => m.contains_key(value),
        }
    }

    pub fn lookup(&self, key: &str) -> Option<&CellValue> {
        match &self.entries {
            ReferenceEntries::Set(_) => None,
            ReferenceEntries::Map(m) => m.get(key),
        }
    }
}

/// A loaded input file.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Table(TabularDataset),
    Document(DocumentTree),
}

impl Artifact {
    pub fn as_table(&self) -> Option<&TabularDataset> {
        match self {
            Artifact::Table(t) => Some(t),
            Artifact::Document(_) => None,
        }
    }

    pub fn as_document(&self) -> Option<&DocumentTree> {
        match self {
            Artifact::Document(d) => Some(d),
            Artifact::Table(_) => None,
        }
    }
}

/// Everything a constraint may consult besides its target file: the
/// simulation configuration, reference tables, and sibling input files.
#[derive(Debug, Clone, Default)]
pub struct EvaluationContext {
    pub config: Option<DocumentTree>,
    pub config_bindings: BTreeMap<String, DocPath>,
    pub references: BTreeMap<String, ReferenceTable>,
    pub sibling_files: BTreeMap<String, Arc<Artifact>>,
}

impl EvaluationContext {
    /// Resolves a symbolic config binding to its node.
    pub fn binding(&self, name: &str) -> Result<&DocNode, EvalError> {
        let path = self
            .config_bindings
            .get(name)
            .ok_or_else(|| EvalError::UnknownBinding(name.to_string()))?;
        let config = self.config.as_ref().ok_or(EvalError::ConfigMissing)?;
        config.resolve(path).ok_or_else(|| EvalError::ConfigBindingMissing {
            binding: name.to_string(),
            path: path.to_string(),
        })
    }

    /// Looks up a raw config path. `Ok(None)` means the path is absent.
    pub fn config_path(&self, path: &DocPath) -> Result<Option<&DocNode>, EvalError> {
        let config = self.config.as_ref().ok_or(EvalError::ConfigMissing)?;
        Ok(config.resolve(path))
    }

    pub fn reference(&self, name: &str) -> Result<&ReferenceTable, EvalError> {
        self.references
            .get(name)
            .ok_or_else(|| EvalError::ReferenceMissing(name.to_string()))
    }

    pub fn sibling(&self, name: &str) -> Result<&Artifact, EvalError> {
        self.sibling_files
            .get(name)
            .map(Arc::as_ref)
            .ok_or_else(|| EvalError::SiblingFileMissing(name.to_string()))
    }

    pub fn sibling_table(&self, name: &str) -> Result<&TabularDataset, EvalError> {
        self.sibling(name)?
            .as_table()
            .ok_or_else(|| EvalError::SiblingNotTabular(name.to_string()))
    }
}
