//! Runs a guard spec over a set of input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use globset::{Glob, GlobMatcher};
use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::crossfile::{
    check_config_gate, check_connectivity, check_foreign_key, check_temporal_window, GateOutcome,
};
use crate::error::{EvalError, LoadError};
use crate::hierarchical::{check_document, CheckMode};
use crate::model::{
    parse_document, parse_tabular, Artifact, EvaluationContext, Finding, LoadOptions, Locus, Violation,
};
use crate::pattern::effective_pattern;
use crate::report::{aggregate, ConstraintResult, FileResult, FileSetResult, ValidationReport};
use crate::spec::{ConstraintDecl, ConstraintKind, GuardSpec};
use crate::tabular;

/// Failures that make a run meaningless (as opposed to data violations).
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Load(#[from] LoadError),

    #[error("configuration `{0}` not found among the inputs")]
    ConfigMissing(String),

    #[error("sibling file `{name}` (glob `{glob}`) matched {matched} inputs; exactly one is required")]
    Sibling { name: String, glob: String, matched: usize },

    #[error("{file}: constraint `{constraint}`: {source}")]
    Eval {
        file: String,
        constraint: String,
        #[source]
        source: EvalError,
    },

    #[error("bad file selector `{glob}`: {reason}")]
    Glob { glob: String, reason: String },

    #[error("constraint `{0}` has no pattern mapping")]
    Unclassifiable(String),
}

#[derive(Debug, Clone)]
enum Source {
    Disk(PathBuf),
    Memory(Arc<[u8]>),
}

/// Input files addressed by slash-separated relative path.
#[derive(Debug, Clone, Default)]
pub struct InputSet {
    files: BTreeMap<String, Source>,
}

impl InputSet {
    /// Every regular file under `root`, recursively.
    pub fn from_dir(root: &Path) -> Result<Self, LoadError> {
        if !root.is_dir() {
            return Err(LoadError::FileMissing {
                path: root.display().to_string(),
            });
        }
        let mut files = BTreeMap::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| LoadError::Io {
                path: root.display().to_string(),
                source: e.into(),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry.path().strip_prefix(root).expect("under root");
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            files.insert(key, Source::Disk(entry.path().to_path_buf()));
        }
        Ok(Self { files })
    }

    pub fn insert(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files
            .insert(path.into(), Source::Memory(Arc::from(bytes.into().into_boxed_slice())));
    }

    pub fn remove(&mut self, path: &str) {
        self.files.remove(path);
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    pub fn read(&self, path: &str) -> Result<Vec<u8>, LoadError> {
        match self.files.get(path) {
            None => Err(LoadError::FileMissing { path: path.to_string() }),
            Some(Source::Memory(b)) => Ok(b.to_vec()),
            Some(Source::Disk(p)) => fs::read(p).map_err(|e| LoadError::Io {
                path: path.to_string(),
                source: e,
            }),
        }
    }

    /// Paths matching a glob, in sorted order.
    pub fn matching(&self, glob: &str) -> Result<Vec<&str>, RunError> {
        let m = matcher(glob)?;
        Ok(self.paths().filter(|p| m.is_match(p)).collect())
    }

    /// Loads one input as a table or a document, by extension.
    pub fn load(&self, path: &str) -> Result<Artifact, LoadError> {
        let bytes = self.read(path)?;
        load_artifact(path, &bytes)
    }
}

fn matcher(glob: &str) -> Result<GlobMatcher, RunError> {
    Glob::new(glob)
        .map(|g| g.compile_matcher())
        .map_err(|e| RunError::Glob {
            glob: glob.to_string(),
            reason: e.to_string(),
        })
}

pub fn is_document_path(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    [".yml", ".yaml", ".json"].iter().any(|e| lower.ends_with(e))
}

/// Parses bytes as a document (`.yml`, `.yaml`, `.json`) or a table.
pub fn load_artifact(path: &str, bytes: &[u8]) -> Result<Artifact, LoadError> {
    if is_document_path(path) {
        let text = std::str::from_utf8(bytes).map_err(|e| LoadError::Parse {
            path: path.to_string(),
            line: 0,
            reason: format!("invalid UTF-8: {e}"),
        })?;
        parse_document(path, text).map(Artifact::Document)
    } else {
        parse_tabular(path, bytes, &LoadOptions::for_path(path)).map(Artifact::Table)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the number of processors.
    pub jobs: usize,
    /// Stop after the first file with a failing check.
    pub fail_fast: bool,
    /// Timestamp written into the report.
    pub generated_at: String,
}

/// Loads the configuration, references and sibling files a spec needs.
pub fn build_context(spec: &GuardSpec, inputs: &InputSet) -> Result<EvaluationContext, RunError> {
    let mut ctx = EvaluationContext {
        config_bindings: spec.config_bindings.clone(),
        references: spec.references.clone(),
        ..Default::default()
    };
    if let Some(config) = &spec.config {
        if !inputs.contains(config) {
            return Err(RunError::ConfigMissing(config.clone()));
        }
        match inputs.load(config)? {
            Artifact::Document(d) => ctx.config = Some(d),
            Artifact::Table(_) => {
                return Err(RunError::Load(LoadError::Parse {
                    path: config.clone(),
                    line: 0,
                    reason: "configuration must be a YAML or JSON document".into(),
                }))
            }
        }
    }
    let mut needed: Vec<&str> = spec.constraints.iter().flat_map(|c| c.kind.sibling_names()).collect();
    needed.sort_unstable();
    needed.dedup();
    for name in needed {
        let glob = spec.selector_glob(name);
        let matched = inputs.matching(glob)?;
        if matched.len() != 1 {
            return Err(RunError::Sibling {
                name: name.to_string(),
                glob: glob.to_string(),
                matched: matched.len(),
            });
        }
        let artifact = inputs.load(matched[0])?;
        ctx.sibling_files.insert(name.to_string(), Arc::new(artifact));
    }
    Ok(ctx)
}

fn wrong(kind: &ConstraintKind, artifact: &Artifact) -> EvalError {
    EvalError::WrongArtifact {
        kind: kind.name(),
        artifact: match artifact {
            Artifact::Table(_) => "table",
            Artifact::Document(_) => "document",
        },
    }
}

/// Evaluates one constraint kind. `Ok(None)` means a gate skipped it.
pub fn evaluate_kind(
    kind: &ConstraintKind,
    artifact: &Artifact,
    ctx: &EvaluationContext,
    spec: &GuardSpec,
) -> Result<Option<Vec<Finding>>, EvalError> {
    use ConstraintKind as K;
    if let K::ConfigGate(p) = kind {
        return match check_config_gate(ctx, p, |inner| {
            evaluate_kind(inner, artifact, ctx, spec).map(Option::unwrap_or_default)
        })? {
            GateOutcome::Skipped => Ok(None),
            GateOutcome::Evaluated(f) => Ok(Some(f)),
        };
    }
    if let K::Syntax(_) = kind {
        return Ok(Some(Vec::new()));
    }
    if let K::DocumentNesting(p) | K::DocumentSchema(p) = kind {
        let doc = artifact.as_document().ok_or_else(|| wrong(kind, artifact))?;
        let schema = spec
            .schema_for(p)
            .ok_or_else(|| EvalError::InvalidParams("schema not loaded".into()))?;
        let mode = if matches!(kind, K::DocumentNesting(_)) {
            CheckMode::Structure
        } else {
            CheckMode::Full
        };
        let at = match &p.at {
            Some(a) => Some(a.parse().map_err(EvalError::InvalidParams)?),
            None => None,
        };
        return Ok(Some(check_document(doc, schema, mode, at.as_ref())));
    }
    let ds = artifact.as_table().ok_or_else(|| wrong(kind, artifact))?;
    let findings = match kind {
        K::Column(p) => tabular::check_column(ds, p, ctx)?,
        K::ColumnsPresent(p) => tabular::check_columns_present(ds, p),
        K::Conditional(p) => tabular::check_conditional(ds, p, ctx)?,
        K::Stepwise(p) => tabular::check_stepwise(ds, p, ctx)?,
        K::DynamicColumns(p) => tabular::check_dynamic_columns(ds, p, ctx)?,
        K::Summation(p) => tabular::check_summation(ds, p, ctx)?,
        K::RowPairs(p) => tabular::check_row_pairs(ds, p),
        K::RowCount(p) => tabular::check_row_count(ds, p),
        K::FirstValueApplies(p) => tabular::check_first_value_applies(ds, p),
        K::ForeignKey(p) => check_foreign_key(ds, p, ctx)?,
        K::Connectivity(p) => check_connectivity(ds, p, ctx)?,
        K::TemporalWindow(p) => check_temporal_window(ds, p, ctx)?,
        K::FileCount(_) => Vec::new(),
        K::ConfigGate(_) | K::Syntax(_) | K::DocumentNesting(_) | K::DocumentSchema(_) => unreachable!(),
    };
    Ok(Some(findings))
}

fn stamp(decl: &ConstraintDecl, pattern: Option<crate::pattern::PatternCode>, file: &str, f: Finding) -> Violation {
    Violation {
        constraint_id: decl.id.clone(),
        pattern,
        severity: decl.severity,
        file: file.to_string(),
        locus: f.locus,
        offending: f.offending,
        message: f.message,
    }
}

struct Planned<'a> {
    decl: &'a ConstraintDecl,
    pattern: Option<crate::pattern::PatternCode>,
}

fn evaluate_file(
    path: &str,
    planned: &[Planned<'_>],
    inputs: &InputSet,
    ctx: &EvaluationContext,
    spec: &GuardSpec,
) -> Result<FileResult, RunError> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut results = Vec::with_capacity(planned.len());
    match inputs.load(path) {
        Err(LoadError::FileMissing { path }) => return Err(LoadError::FileMissing { path }.into()),
        Err(e) => {
            let message = e.to_string();
            for p in planned {
                results.push(ConstraintResult {
                    constraint_id: p.decl.id.clone(),
                    pattern: p.pattern,
                    severity: p.decl.severity,
                    skipped: false,
                    violations: vec![stamp(p.decl, p.pattern, path, Finding::new(Locus::File, None, message.clone()))],
                });
            }
        }
        Ok(artifact) => {
            if matches!(&artifact, Artifact::Table(t) if t.row_count() == 0) {
                notes.push("no data rows".to_string());
            }
            for p in planned {
                let outcome = evaluate_kind(&p.decl.kind, &artifact, ctx, spec).map_err(|source| RunError::Eval {
                    file: path.to_string(),
                    constraint: p.decl.id.clone(),
                    source,
                })?;
                let (skipped, findings) = match outcome {
                    None => (true, Vec::new()),
                    Some(f) => (false, f),
                };
                results.push(ConstraintResult {
                    constraint_id: p.decl.id.clone(),
                    pattern: p.pattern,
                    severity: p.decl.severity,
                    skipped,
                    violations: findings.into_iter().map(|f| stamp(p.decl, p.pattern, path, f)).collect(),
                });
            }
        }
    }
    Ok(FileResult {
        path: path.to_string(),
        notes,
        results,
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}

fn file_set_checks(spec: &GuardSpec, inputs: &InputSet) -> Result<Vec<FileSetResult>, RunError> {
    let mut out = Vec::new();
    for c in &spec.constraints {
        let ConstraintKind::FileCount(p) = &c.kind else { continue };
        let glob = spec.selector_glob(&c.on);
        let matched = inputs.matching(glob)?.len();
        let n = matched as u64;
        let passed = p.min.is_none_or(|m| n >= m) && p.max.is_none_or(|m| n <= m);
        out.push(FileSetResult {
            constraint_id: c.id.clone(),
            severity: c.severity,
            matched,
            passed,
            message: format!("{matched} files match `{glob}`"),
        });
    }
    Ok(out)
}

/// Evaluates every constraint of `spec` against `inputs`.
pub fn validate(spec: &GuardSpec, inputs: &InputSet, opts: &RunOptions) -> Result<ValidationReport, RunError> {
    let ctx = build_context(spec, inputs)?;
    let mut per_file: BTreeMap<&str, Vec<Planned<'_>>> = BTreeMap::new();
    for decl in &spec.constraints {
        if matches!(decl.kind, ConstraintKind::FileCount(_)) {
            continue;
        }
        let pattern = effective_pattern(decl, spec).map_err(|_| RunError::Unclassifiable(decl.id.clone()))?;
        for path in inputs.matching(spec.selector_glob(&decl.on))? {
            per_file.entry(path).or_default().push(Planned { decl, pattern });
        }
    }
    let work: Vec<(&str, Vec<Planned<'_>>)> = per_file.into_iter().collect();

    let results: Vec<FileResult> = if opts.fail_fast {
        let mut out = Vec::new();
        for (path, planned) in &work {
            let r = evaluate_file(path, planned, inputs, &ctx, spec)?;
            let failing = r
                .results
                .iter()
                .any(|c| c.violations.iter().any(|v| v.severity == crate::model::Severity::Error));
            out.push(r);
            if failing {
                break;
            }
        }
        out
    } else {
        let run = || {
            work.par_iter()
                .map(|(path, planned)| evaluate_file(path, planned, inputs, &ctx, spec))
                .collect::<Vec<_>>()
        };
        let collected = if opts.jobs == 1 {
            work.iter()
                .map(|(path, planned)| evaluate_file(path, planned, inputs, &ctx, spec))
                .collect()
        } else if opts.jobs > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.jobs)
                .build()
                .map(|pool| pool.install(run))
                .unwrap_or_else(|_| run())
        } else {
            run()
        };
        collected.into_iter().collect::<Result<Vec<_>, _>>()?
    };

    let file_set = file_set_checks(spec, inputs)?;
    Ok(aggregate(&spec.name, &opts.generated_at, results, file_set))
}
