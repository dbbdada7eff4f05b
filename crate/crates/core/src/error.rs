use std::io;

use thiserror::Error;

/// Failures while reading an input artifact.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: file not found")]
    FileMissing { path: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("{path}:{line}:{col}: {reason}")]
    Syntax {
        path: String,
        line: usize,
        col: usize,
        reason: String,
    },

    #[error("{path}:{line}: duplicate key at `{key_path}`")]
    DuplicateKey {
        path: String,
        key_path: String,
        line: usize,
    },
}

/// A guard spec that cannot be used: bad syntax, unknown kinds, or
/// parameters that fail their kind-specific validation.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
}

impl SpecError {
    pub fn invalid(context: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Invalid {
            context: context.into(),
            message: message.into(),
        }
    }
}

/// Run-configuration failures raised while evaluating a constraint. These
/// are not data violations: they mean the run itself is misconfigured.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no configuration document is loaded")]
    ConfigMissing,

    #[error("config binding `{binding}` does not resolve (path `{path}`)")]
    ConfigBindingMissing { binding: String, path: String },

    #[error("unknown config binding `{0}`")]
    UnknownBinding(String),

    #[error("reference table `{0}` is not declared")]
    ReferenceMissing(String),

    #[error("reference table `{table}` has no key `{key}`")]
    ReferenceKeyMissing { table: String, key: String },

    #[error("sibling file `{0}` is not available")]
    SiblingFileMissing(String),

    #[error("sibling file `{0}` is not tabular")]
    SiblingNotTabular(String),

    #[error("column selector matched no column")]
    SelectorEmpty,

    #[error("parameter `{name}` resolved to a non-numeric value `{value}`")]
    NotNumeric { name: String, value: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("constraint kind `{kind}` cannot be applied to a {artifact}")]
    WrongArtifact {
        kind: &'static str,
        artifact: &'static str,
    },
}
