//! The guard-spec file: logical files, configuration, reference tables,
//! config bindings, and the constraint list.
//!
//! ```yaml
//! name: flee-inputs
//! files:
//!   locations: locations.csv
//!   routes: routes.csv
//! config: simsettings.yml
//! bindings:
//!   sim_period: simulation/period
//! references:
//!   months: {entries: {jan: 31, feb: 28}}
//! constraints:
//!   - {id: pop, kind: column, on: locations, params: {column: population, expected_type: real, ge: 0}}
//! ```

mod constraint;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use globset::Glob;

pub use constraint::*;

use crate::error::{EvalError, LoadError, SpecError};
use crate::hierarchical::NodeSchema;
use crate::model::{
    load_tabular, parse_document, CellValue, DocNode, DocPath, EvaluationContext, LoadOptions, ReferenceEntries,
    ReferenceTable,
};

/// A parsed, validated guard spec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuardSpec {
    pub name: String,
    /// Logical file name to a glob over input paths (relative to the
    /// input directory).
    pub files: BTreeMap<String, String>,
    /// Configuration document path, relative to the input directory.
    pub config: Option<String>,
    pub references: BTreeMap<String, ReferenceTable>,
    /// Symbolic name to a path inside the configuration document.
    pub config_bindings: BTreeMap<String, DocPath>,
    pub constraints: Vec<ConstraintDecl>,
    /// Schemas named by path in `document_*` constraints, keyed by that path.
    pub schemas: BTreeMap<String, NodeSchema>,
}

const TOP_LEVEL_KEYS: [&str; 6] = ["name", "files", "config", "bindings", "references", "constraints"];

impl GuardSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Loads a spec file; schema and reference paths resolve against the
    /// spec's own directory.
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let display = path.display().to_string();
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(LoadError::FileMissing { path: display }.into())
            }
            Err(e) => return Err(LoadError::Io { path: display, source: e }.into()),
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&display, &text, &base)
    }

    pub fn parse(source: &str, text: &str, base_dir: &Path) -> Result<Self, SpecError> {
        let doc = parse_document(source, text)?;
        let json = doc.root.to_json();
        let obj = json
            .as_object()
            .ok_or_else(|| SpecError::invalid(source, "a guard spec must be a mapping"))?;
        for key in obj.keys() {
            if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
                return Err(SpecError::invalid(source, format!("unknown top-level key `{key}`")));
            }
        }
        let mut spec = GuardSpec::new(
            obj.get("name")
                .and_then(|v| v.as_str())
                .ok_or_else(|| SpecError::invalid(source, "missing `name`"))?,
        );

        if let Some(files) = obj.get("files") {
            let files = files
                .as_object()
                .ok_or_else(|| SpecError::invalid(source, "`files` must be a mapping"))?;
            for (name, glob) in files {
                let glob = glob
                    .as_str()
                    .ok_or_else(|| SpecError::invalid(format!("files/{name}"), "glob must be text"))?;
                spec.files.insert(name.clone(), glob.to_string());
            }
        }
        match obj.get("config") {
            None | Some(serde_json::Value::Null) => {}
            Some(serde_json::Value::String(p)) => spec.config = Some(p.clone()),
            Some(_) => return Err(SpecError::invalid(source, "`config` must be a path")),
        }
        if let Some(bindings) = obj.get("bindings") {
            let bindings = bindings
                .as_object()
                .ok_or_else(|| SpecError::invalid(source, "`bindings` must be a mapping"))?;
            for (name, path) in bindings {
                let path = path
                    .as_str()
                    .ok_or_else(|| SpecError::invalid(format!("bindings/{name}"), "path must be text"))?;
                let parsed: DocPath = path
                    .parse()
                    .map_err(|e: String| SpecError::invalid(format!("bindings/{name}"), e))?;
                if parsed.is_root() {
                    return Err(SpecError::invalid(format!("bindings/{name}"), "path is empty"));
                }
                spec.config_bindings.insert(name.clone(), parsed);
            }
        }
        if let Some(refs) = obj.get("references") {
            let refs = refs
                .as_object()
                .ok_or_else(|| SpecError::invalid(source, "`references` must be a mapping"))?;
            for (name, decl) in refs {
                let table = parse_reference(name, decl, base_dir)?;
                spec.references.insert(name.clone(), table);
            }
        }
        let entries = match obj.get("constraints") {
            None => Vec::new(),
            Some(serde_json::Value::Array(items)) => items.clone(),
            Some(_) => return Err(SpecError::invalid(source, "`constraints` must be a list")),
        };
        for (i, entry) in entries.iter().enumerate() {
            let decl = ConstraintDecl::from_json(entry).map_err(|e| SpecError::invalid(format!("constraints/{i}"), e))?;
            spec.constraints.push(decl);
        }
        spec.load_schemas(base_dir)?;
        spec.validate()?;
        Ok(spec)
    }

    fn load_schemas(&mut self, base_dir: &Path) -> Result<(), SpecError> {
        let mut paths = BTreeSet::new();
        for c in &self.constraints {
            if let Some(DocumentParams {
                schema: SchemaSource::Path(p),
                ..
            }) = document_params(&c.kind)
            {
                paths.insert(p.clone());
            }
        }
        for p in paths {
            let full = base_dir.join(&p);
            let doc = crate::model::load_document(&full)?;
            let schema: NodeSchema = serde_json::from_value(doc.root.to_json())
                .map_err(|e| SpecError::invalid(format!("schema {p}"), e.to_string()))?;
            schema
                .validate()
                .map_err(|e| SpecError::invalid(format!("schema {p}"), e))?;
            self.schemas.insert(p, schema);
        }
        Ok(())
    }

    /// Cross-entry validation: unique ids, declared names, valid globs.
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut ids = BTreeSet::new();
        for (name, glob) in &self.files {
            Glob::new(glob).map_err(|e| SpecError::invalid(format!("files/{name}"), e.to_string()))?;
        }
        for c in &self.constraints {
            let ctx = || format!("constraint `{}`", c.id);
            if !ids.insert(c.id.as_str()) {
                return Err(SpecError::invalid(ctx(), "duplicate constraint id"));
            }
            c.kind.validate().map_err(|e| SpecError::invalid(ctx(), e))?;
            if !self.files.contains_key(&c.on) {
                Glob::new(&c.on).map_err(|e| SpecError::invalid(ctx(), format!("bad file selector: {e}")))?;
            }
            for v in c.kind.param_values() {
                match v {
                    ParamValue::Config { config } => {
                        if !self.config_bindings.contains_key(config) {
                            return Err(SpecError::invalid(ctx(), format!("unknown config binding `{config}`")));
                        }
                        if self.config.is_none() {
                            return Err(SpecError::invalid(ctx(), "config binding used but no `config` declared"));
                        }
                    }
                    ParamValue::Reference { reference, key } => {
                        let table = self
                            .references
                            .get(reference)
                            .ok_or_else(|| SpecError::invalid(ctx(), format!("unknown reference `{reference}`")))?;
                        if table.lookup(key).is_none() {
                            return Err(SpecError::invalid(
                                ctx(),
                                format!("reference `{reference}` has no key `{key}`"),
                            ));
                        }
                    }
                    _ => {}
                }
            }
            for r in c.kind.reference_names() {
                if !self.references.contains_key(r) {
                    return Err(SpecError::invalid(ctx(), format!("unknown reference `{r}`")));
                }
            }
            for s in c.kind.sibling_names() {
                if !self.files.contains_key(s) {
                    return Err(SpecError::invalid(ctx(), format!("sibling file `{s}` is not declared in `files`")));
                }
            }
            if matches!(c.kind, ConstraintKind::ConfigGate(_)) && self.config.is_none() {
                return Err(SpecError::invalid(ctx(), "config_gate requires a `config` document"));
            }
            if matches!(c.kind, ConstraintKind::FileCount(_)) && c.pattern.is_some() {
                return Err(SpecError::invalid(ctx(), "file_count checks carry no pattern code"));
            }
            if let Some(DocumentParams {
                schema: SchemaSource::Path(p),
                ..
            }) = document_params(&c.kind)
            {
                if !self.schemas.contains_key(p) {
                    return Err(SpecError::invalid(ctx(), format!("schema `{p}` is not loaded")));
                }
            }
        }
        Ok(())
    }

    /// The glob a constraint's `on` selector stands for.
    pub fn selector_glob<'a>(&'a self, on: &'a str) -> &'a str {
        self.files.get(on).map(String::as_str).unwrap_or(on)
    }

    /// The schema a document constraint applies.
    pub fn schema_for<'a>(&'a self, params: &'a DocumentParams) -> Option<&'a NodeSchema> {
        match &params.schema {
            SchemaSource::Inline(s) => Some(s),
            SchemaSource::Path(p) => self.schemas.get(p),
        }
    }

    /// Renders the guard spec as YAML; each constraint is one flow mapping, with
    /// its note (if any) as a comment above it.
    pub fn to_yaml(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string");
        let mut out = String::new();
        let _ = writeln!(out, "name: {}", q(&self.name));
        if !self.files.is_empty() {
            out.push_str("files:\n");
            for (k, v) in &self.files {
                let _ = writeln!(out, "  {}: {}", q(k), q(v));
            }
        }
        if let Some(c) = &self.config {
            let _ = writeln!(out, "config: {}", q(c));
        }
        if !self.config_bindings.is_empty() {
            out.push_str("bindings:\n");
            for (k, v) in &self.config_bindings {
                let _ = writeln!(out, "  {}: {}", q(k), q(&v.to_string()));
            }
        }
        if !self.references.is_empty() {
            out.push_str("references:\n");
            for (k, v) in &self.references {
                let body = match &v.entries {
                    ReferenceEntries::Set(s) => serde_json::json!({ "values": s }),
                    ReferenceEntries::Map(m) => {
                        let entries: serde_json::Map<String, serde_json::Value> = m
                            .iter()
                            .map(|(k, v)| (k.clone(), serde_json::to_value(Scalar(v.clone())).expect("scalar")))
                            .collect();
                        serde_json::json!({ "entries": entries })
                    }
                };
                let _ = writeln!(out, "  {}: {}", q(k), body);
            }
        }
        out.push_str("constraints:");
        if self.constraints.is_empty() {
            out.push_str(" []\n");
            return out;
        }
        out.push('\n');
        for c in &self.constraints {
            if let Some(note) = &c.note {
                let _ = writeln!(out, "  # {note}");
            }
            let _ = writeln!(out, "  - {}", c.to_json());
        }
        out
    }
}

fn document_params(kind: &ConstraintKind) -> Option<&DocumentParams> {
    match kind {
        ConstraintKind::DocumentNesting(p) | ConstraintKind::DocumentSchema(p) => Some(p),
        ConstraintKind::ConfigGate(g) => document_params(&g.constraint),
        _ => None,
    }
}

/// A reference entry is `{values: [...]}`, `{entries: {k: v}}`,
/// `{path: file.csv, column: c}` or `{path: file.csv, key: k, value: v}`.
fn parse_reference(name: &str, decl: &serde_json::Value, base_dir: &Path) -> Result<ReferenceTable, SpecError> {
    let ctx = format!("references/{name}");
    let bad = |m: &str| SpecError::invalid(ctx.clone(), m.to_string());
    let obj = decl.as_object().ok_or_else(|| bad("must be a mapping"))?;
    let text = |k: &str| obj.get(k).and_then(|v| v.as_str());
    let entries = if let Some(values) = obj.get("values") {
        let items = values.as_array().ok_or_else(|| bad("`values` must be a list"))?;
        let mut set = BTreeSet::new();
        for v in items {
            match json_scalar(v) {
                Some(CellValue::Null) | None => return Err(bad("`values` must hold non-null scalars")),
                Some(c) => {
                    set.insert(c.render());
                }
            }
        }
        ReferenceEntries::Set(set)
    } else if let Some(entries) = obj.get("entries") {
        let map = entries.as_object().ok_or_else(|| bad("`entries` must be a mapping"))?;
        let mut out = BTreeMap::new();
        for (k, v) in map {
            match json_scalar(v) {
                Some(CellValue::Null) | None => return Err(bad("`entries` values must be non-null scalars")),
                Some(c) => {
                    out.insert(k.clone(), c);
                }
            }
        }
        ReferenceEntries::Map(out)
    } else if let Some(path) = text("path") {
        let full: PathBuf = base_dir.join(path);
        let ds = load_tabular(&full, &LoadOptions::for_path(path))?;
        let col = |n: &str| {
            ds.column_index(n)
                .ok_or_else(|| SpecError::invalid(ctx.clone(), format!("column `{n}` not in {path}")))
        };
        match (text("column"), text("key"), text("value")) {
            (Some(c), None, None) => {
                let idx = col(c)?;
                ReferenceEntries::Set(ds.column(idx).filter(|v| !v.is_null()).map(CellValue::render).collect())
            }
            (None, Some(k), Some(v)) => {
                let (ki, vi) = (col(k)?, col(v)?);
                let mut out = BTreeMap::new();
                for row in ds.rows() {
                    if !row[ki].is_null() && !row[vi].is_null() {
                        out.insert(row[ki].render(), row[vi].clone());
                    }
                }
                ReferenceEntries::Map(out)
            }
            _ => return Err(bad("file references need `column`, or `key` and `value`")),
        }
    } else {
        return Err(bad("expected `values`, `entries` or `path`"));
    };
    Ok(ReferenceTable {
        name: name.to_string(),
        entries,
    })
}

impl ParamValue {
    /// Resolves to a scalar using config bindings and reference tables.
    pub fn resolve(&self, ctx: &EvaluationContext) -> Result<CellValue, EvalError> {
        match self {
            ParamValue::Number(n) => Ok(CellValue::Real(*n)),
            ParamValue::Text(t) => Ok(CellValue::Text(t.clone())),
            ParamValue::Config { config } => match ctx.binding(config)? {
                DocNode::Scalar(v) if !v.is_null() => Ok(v.clone()),
                other => Err(EvalError::NotNumeric {
                    name: config.clone(),
                    value: other.kind_name().to_string(),
                }),
            },
            ParamValue::Reference { reference, key } => ctx
                .reference(reference)?
                .lookup(key)
                .cloned()
                .ok_or_else(|| EvalError::ReferenceKeyMissing {
                    table: reference.clone(),
                    key: key.clone(),
                }),
        }
    }

    /// Resolves to a finite number.
    pub fn resolve_number(&self, ctx: &EvaluationContext) -> Result<f64, EvalError> {
        let v = self.resolve(ctx)?;
        v.as_f64().ok_or_else(|| EvalError::NotNumeric {
            name: self.describe(),
            value: v.render(),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            ParamValue::Number(n) => n.to_string(),
            ParamValue::Text(t) => t.clone(),
            ParamValue::Config { config } => format!("config:{config}"),
            ParamValue::Reference { reference, key } => format!("{reference}[{key}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
name: flee
files:
  locations: locations.csv
  routes: routes.csv
config: simsettings.yml
bindings:
  sim_period: simulation/period
references:
  months: {entries: {jan: 31, feb: 28}}
constraints:
  - {id: pop, kind: column, on: locations, params: {column: population, expected_type: real, ge: 0, nullable: true}}
  - id: days
    kind: stepwise
    on: closures
    params: {column: day, min: 0, max: {config: sim_period}, step: 1}
  - {id: iso, kind: connectivity, on: locations, params: {node_column: name, edge_file: routes, endpoint_columns: [name1, name2]}}
"#;

    #[test]
    fn parses_and_reemits() {
        let spec = GuardSpec::parse("spec.yml", SPEC, Path::new(".")).unwrap();
        assert_eq!(spec.constraints.len(), 3);
        assert_eq!(spec.config_bindings["sim_period"].to_string(), "simulation/period");
        let again = GuardSpec::parse("spec.yml", &spec.to_yaml(), Path::new(".")).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_names() {
        let dup = SPEC.replace("id: days", "id: pop");
        assert!(GuardSpec::parse("s", &dup, Path::new(".")).is_err());
        let unbound = SPEC.replace("{config: sim_period}", "{config: nope}");
        assert!(GuardSpec::parse("s", &unbound, Path::new(".")).is_err());
        let sibling = SPEC.replace("edge_file: routes", "edge_file: roads");
        assert!(GuardSpec::parse("s", &sibling, Path::new(".")).is_err());
        let top = format!("{SPEC}\nextra: 1\n");
        assert!(GuardSpec::parse("s", &top, Path::new(".")).is_err());
        let bad_binding = SPEC.replace("simulation/period", "simulation//period");
        assert!(GuardSpec::parse("s", &bad_binding, Path::new(".")).is_err());
    }

    #[test]
    fn resolves_param_values() {
        let spec = GuardSpec::parse("spec.yml", SPEC, Path::new(".")).unwrap();
        let mut ctx = EvaluationContext {
            config_bindings: spec.config_bindings.clone(),
            references: spec
                .references
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            ..Default::default()
        };
        let feb = ParamValue::Reference {
            reference: "months".into(),
            key: "feb".into(),
        };
        assert_eq!(feb.resolve_number(&ctx), Ok(28.0));
        let period = ParamValue::Config {
            config: "sim_period".into(),
        };
        assert_eq!(period.resolve_number(&ctx), Err(EvalError::ConfigMissing));
        ctx.config = Some(parse_document("c.yml", "simulation: {period: 10}").unwrap());
        assert_eq!(period.resolve_number(&ctx), Ok(10.0));
    }
}
