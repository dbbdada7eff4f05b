//! Bootstraps a guard spec from sample inputs: column types, ranges,
//! enumerations, nullability and uniqueness for tables, and a closed
//! structural schema for documents.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::engine::{validate, InputSet, RunError, RunOptions};
use crate::error::LoadError;
use crate::hierarchical::{NodeSchema, SchemaType, TypeSet};
use crate::model::{cell::cmp_int_real, Artifact, CellValue, DocNode, DocumentTree, TabularDataset, ValueType};
use crate::report::ValidationReport;
use crate::spec::{ColumnParams, ConstraintDecl, ConstraintKind, DocumentParams, GuardSpec, ParamValue, SchemaSource};
use crate::tabular::unique_key;

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOptions {
    /// Largest distinct-value count still emitted as an enumeration.
    pub enum_max_cardinality: usize,
    /// Fewest rows before enumerations are emitted at all.
    pub enum_min_rows: usize,
    /// Widening applied to observed numeric ranges.
    pub range_padding: f64,
    pub infer_uniqueness: bool,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            enum_max_cardinality: 10,
            enum_min_rows: 20,
            range_padding: 0.0,
            infer_uniqueness: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum InferError {
    #[error("no inputs")]
    NoInputs,
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("range_padding must be finite and >= 0")]
    BadPadding,
}

fn narrowest_type(values: &[&CellValue]) -> ValueType {
    let all = |f: fn(&CellValue) -> bool| values.iter().all(|v| f(v));
    if values.is_empty() {
        ValueType::Text
    } else if all(|v| matches!(v, CellValue::Integer(_))) {
        ValueType::Integer
    } else if all(CellValue::is_numeric) {
        ValueType::Real
    } else if all(|v| matches!(v, CellValue::Boolean(_))) {
        ValueType::Boolean
    } else {
        ValueType::Text
    }
}

/// The largest f64 not above `v` (exact for integers beyond 2^53).
fn lower_f64(v: &CellValue) -> f64 {
    match v {
        CellValue::Integer(i) => {
            let f = *i as f64;
            if cmp_int_real(*i, f).is_lt() {
                f - f.abs() * f64::EPSILON
            } else {
                f
            }
        }
        other => other.as_f64().unwrap_or(0.0),
    }
}

fn upper_f64(v: &CellValue) -> f64 {
    match v {
        CellValue::Integer(i) => {
            let f = *i as f64;
            if cmp_int_real(*i, f).is_gt() {
                f + f.abs() * f64::EPSILON
            } else {
                f
            }
        }
        other => other.as_f64().unwrap_or(0.0),
    }
}

/// Identifier-safe form of a name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

/// One `column` constraint per column of `ds`, bound to file `on`.
pub fn infer_tabular(ds: &TabularDataset, on: &str, opt: &InferenceOptions) -> Vec<ConstraintDecl> {
    if ds.row_count() == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (c, name) in ds.column_names().iter().enumerate() {
        let values: Vec<&CellValue> = ds.column(c).filter(|v| !v.is_null()).collect();
        let nullable = values.len() < ds.row_count();
        let t = narrowest_type(&values);
        let mut p = ColumnParams {
            expected_type: Some(t),
            nullable,
            ..ColumnParams::for_column(name.clone())
        };
        if matches!(t, ValueType::Integer | ValueType::Real) && !values.is_empty() {
            let by_cmp = |a: &&&CellValue, b: &&&CellValue| a.compare(b).expect("numeric");
            let min = values.iter().min_by(by_cmp).expect("non-empty");
            let max = values.iter().max_by(by_cmp).expect("non-empty");
            p.ge = Some(ParamValue::Number(lower_f64(min) - opt.range_padding));
            p.le = Some(ParamValue::Number(upper_f64(max) + opt.range_padding));
        }
        let distinct: BTreeSet<String> = values.iter().map(|v| v.render()).collect();
        if !values.is_empty() && distinct.len() <= opt.enum_max_cardinality && ds.row_count() >= opt.enum_min_rows {
            p.isin = Some(distinct.into_iter().collect());
        }
        if opt.infer_uniqueness && !values.is_empty() {
            let mut seen = HashSet::new();
            if values.iter().all(|v| seen.insert(unique_key(v))) {
                p.unique = true;
            }
        }
        let mut decl = ConstraintDecl::new(format!("{}.{}", slug(on), slug(name)), on, ConstraintKind::Column(p));
        decl.note = Some("inferred".into());
        out.push(decl);
    }
    out
}

fn scalar_type(v: &CellValue) -> SchemaType {
    SchemaType::of(&DocNode::Scalar(v.clone()))
}

/// A closed structural schema mirroring the tree. Scalars get a type only.
pub fn infer_document(doc: &DocumentTree) -> NodeSchema {
    infer_node(&doc.root)
}

fn infer_node(node: &DocNode) -> NodeSchema {
    match node {
        DocNode::Scalar(v) => NodeSchema::of_type(scalar_type(v)),
        DocNode::Sequence(items) => {
            let mut s = NodeSchema::of_type(SchemaType::Array);
            s.items = items.iter().map(infer_node).reduce(merge).map(Box::new);
            s
        }
        DocNode::Mapping(entries) => {
            let mut s = NodeSchema::of_type(SchemaType::Object);
            s.additional_properties = false;
            for (k, v) in entries {
                s.properties.insert(k.clone(), infer_node(v));
                s.required.push(k.clone());
            }
            s
        }
    }
}

/// The least schema accepting everything either input accepts.
fn merge(a: NodeSchema, b: NodeSchema) -> NodeSchema {
    let ta: BTreeSet<SchemaType> = a.types.0.iter().copied().collect();
    let tb: BTreeSet<SchemaType> = b.types.0.iter().copied().collect();
    let mut types: BTreeSet<SchemaType> = ta.union(&tb).copied().collect();
    if types.contains(&SchemaType::Number) {
        types.remove(&SchemaType::Integer);
    }
    let mut out = NodeSchema {
        types: TypeSet(types.iter().copied().collect()),
        ..NodeSchema::default()
    };
    let both_objects = ta.contains(&SchemaType::Object) && tb.contains(&SchemaType::Object);
    if types.contains(&SchemaType::Object) {
        let mut props = a.properties;
        for (k, v) in b.properties {
            let merged = match props.remove(&k) {
                Some(existing) => merge(existing, v),
                None => v,
            };
            props.insert(k, merged);
        }
        out.properties = props;
        out.required = if both_objects {
            a.required.into_iter().filter(|k| b.required.contains(k)).collect()
        } else {
            Vec::new()
        };
        out.additional_properties = a.additional_properties && b.additional_properties;
        if !both_objects {
            out.additional_properties = false;
        }
    }
    if types.contains(&SchemaType::Array) {
        out.items = match (a.items, b.items) {
            (Some(x), Some(y)) => Some(Box::new(merge(*x, *y))),
            (x, y) => x.or(y),
        };
    }
    out
}

/// An inferred spec and the notes gathered while building it.
#[derive(Debug, Clone)]
pub struct InferredSpec {
    pub spec: GuardSpec,
    pub warnings: Vec<String>,
}

fn escape_glob(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for c in path.chars() {
        if matches!(c, '*' | '?' | '[' | ']' | '{' | '}' | '\\') {
            out.push('[');
            out.push(c);
            out.push(']');
        } else {
            out.push(c);
        }
    }
    out
}

fn file_stem(path: &str) -> &str {
    let base = path.rsplit('/').next().unwrap_or(path);
    base.rsplit_once('.').map(|(s, _)| s).filter(|s| !s.is_empty()).unwrap_or(base)
}

/// Infers a spec over every input. Document schemas are registered under
/// `<name>.schema.json`, the path a written spec refers to.
pub fn infer_spec(inputs: &InputSet, name: &str, opt: &InferenceOptions) -> Result<InferredSpec, InferError> {
    if inputs.is_empty() {
        return Err(InferError::NoInputs);
    }
    if !(opt.range_padding.is_finite() && opt.range_padding >= 0.0) {
        return Err(InferError::BadPadding);
    }
    let mut spec = GuardSpec::new(name);
    let mut warnings = Vec::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for path in inputs.paths() {
        let base = slug(file_stem(path));
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let logical = if *n == 1 { base } else { format!("{base}_{n}") };
        spec.files.insert(logical.clone(), escape_glob(path));
        match inputs.load(path)? {
            Artifact::Table(ds) => {
                if ds.row_count() == 0 {
                    warnings.push(format!("{path}: no data rows; nothing inferred"));
                }
                spec.constraints.extend(infer_tabular(&ds, &logical, opt));
            }
            Artifact::Document(doc) => {
                let schema_path = format!("{logical}.schema.json");
                spec.schemas.insert(schema_path.clone(), infer_document(&doc));
                let mut decl = ConstraintDecl::new(
                    format!("{logical}.schema"),
                    logical.clone(),
                    ConstraintKind::DocumentSchema(DocumentParams {
                        schema: SchemaSource::Path(schema_path),
                        at: None,
                    }),
                );
                decl.note = Some("inferred".into());
                spec.constraints.push(decl);
            }
        }
    }
    Ok(InferredSpec { spec, warnings })
}

/// Validates `inputs` against a spec inferred from them. Sound inference
/// yields no error violations.
pub fn round_trip_check(inputs: &InputSet, inferred: &GuardSpec) -> Result<ValidationReport, RunError> {
    validate(inferred, inputs, &RunOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_document, parse_tabular, LoadOptions};

    fn table(csv: &str) -> TabularDataset {
        parse_tabular("t.csv", csv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn column_params(d: &ConstraintDecl) -> &ColumnParams {
        match &d.kind {
            ConstraintKind::Column(p) => p,
            _ => panic!("not a column constraint"),
        }
    }

    #[test]
    fn small_integer_column() {
        let ds = table("x\n1\n2\n3\n");
        let decls = infer_tabular(&ds, "t", &InferenceOptions::default());
        let p = column_params(&decls[0]);
        assert_eq!(p.expected_type, Some(ValueType::Integer));
        assert_eq!(p.ge, Some(ParamValue::Number(1.0)));
        assert_eq!(p.le, Some(ParamValue::Number(3.0)));
        assert!(!p.nullable && p.unique);
        assert_eq!(p.isin, None);
    }

    #[test]
    fn enumeration_needs_rows_and_low_cardinality() {
        let kinds = ["town", "camp", "conflict_zone"];
        let mut csv = "location_type,population\n".to_string();
        for i in 0..100 {
            csv.push_str(&format!("{},{}\n", kinds[i % 3], i as f64 + 0.5));
        }
        let decls = infer_tabular(&table(&csv), "locations", &InferenceOptions::default());
        let lt = column_params(&decls[0]);
        assert_eq!(lt.isin.as_ref().unwrap().len(), 3);
        let pop = column_params(&decls[1]);
        assert_eq!(pop.expected_type, Some(ValueType::Real));
        assert_eq!(pop.ge, Some(ParamValue::Number(0.5)));
        assert_eq!(pop.isin, None);
    }

    #[test]
    fn document_schema_shape() {
        let doc = parse_document("m.yml", "{a: 1, b: x, partial_closure: {school: 0.5, leisure: 1}, l: [1, 2.5]}").unwrap();
        let s = infer_document(&doc);
        assert!(!s.additional_properties);
        assert_eq!(s.required, vec!["a", "b", "partial_closure", "l"]);
        assert_eq!(s.properties["a"].types, TypeSet::one(SchemaType::Integer));
        assert_eq!(s.properties["b"].types, TypeSet::one(SchemaType::String));
        let pc = &s.properties["partial_closure"];
        assert_eq!(pc.properties["school"].types, TypeSet::one(SchemaType::Number));
        let items = s.properties["l"].items.as_ref().unwrap();
        assert_eq!(items.types, TypeSet::one(SchemaType::Number));
        s.validate().unwrap();
    }

    #[test]
    fn round_trip_and_perturbation() {
        let mut inputs = InputSet::default();
        inputs.insert("locations.csv", "name,population\nA,10\nB,\nC,3.5\n");
        inputs.insert("measures.yml", "partial_closure: {school: 0.5}\n");
        let inferred = infer_spec(&inputs, "auto", &InferenceOptions::default()).unwrap();
        let report = round_trip_check(&inputs, &inferred.spec).unwrap();
        assert_eq!(report.totals.failed, 0, "{}", report.to_text());

        inputs.insert("locations.csv", "name,population\nA,10\nB,\nC,30.5\n");
        let report = round_trip_check(&inputs, &inferred.spec).unwrap();
        assert_eq!(report.errors().count(), 1);

        let text = inferred.spec.to_yaml();
        assert!(text.contains("# inferred"));
    }
}
