//! Schema validation for hierarchical inputs (YAML/JSON).
//!
//! The schema language covers `type`, `properties`, `required`,
//! `additionalProperties`, `minimum`, `maximum`, `enum` and `items`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{load_document, parse_document, CellValue, DocNode, DocPath, DocumentTree, Finding, Locus};
use crate::spec::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaType {
    Object,
    Array,
    Number,
    Integer,
    String,
    Boolean,
    Null,
}

impl SchemaType {
    fn is_container(self) -> bool {
        matches!(self, SchemaType::Object | SchemaType::Array)
    }

    /// Whether `node` has this type. `integer` accepts whole-number reals;
    /// `number` accepts integers.
    pub fn accepts(self, node: &DocNode) -> bool {
        match (self, node) {
            (SchemaType::Object, DocNode::Mapping(_)) => true,
            (SchemaType::Array, DocNode::Sequence(_)) => true,
            (SchemaType::Number, DocNode::Scalar(v)) => v.is_numeric(),
            (SchemaType::Integer, DocNode::Scalar(CellValue::Integer(_))) => true,
            (SchemaType::Integer, DocNode::Scalar(CellValue::Real(r))) => r.fract() == 0.0,
            (SchemaType::String, DocNode::Scalar(CellValue::Text(_))) => true,
            (SchemaType::Boolean, DocNode::Scalar(CellValue::Boolean(_))) => true,
            (SchemaType::Null, DocNode::Scalar(CellValue::Null)) => true,
            _ => false,
        }
    }

    /// The narrowest type describing a node.
    pub fn of(node: &DocNode) -> SchemaType {
        match node {
            DocNode::Mapping(_) => SchemaType::Object,
            DocNode::Sequence(_) => SchemaType::Array,
            DocNode::Scalar(CellValue::Integer(_)) => SchemaType::Integer,
            DocNode::Scalar(CellValue::Real(_)) => SchemaType::Number,
            DocNode::Scalar(CellValue::Text(_)) => SchemaType::String,
            DocNode::Scalar(CellValue::Boolean(_)) => SchemaType::Boolean,
            DocNode::Scalar(CellValue::Null) => SchemaType::Null,
        }
    }
}

impl fmt::Display for SchemaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaType::Object => "object",
            SchemaType::Array => "array",
            SchemaType::Number => "number",
            SchemaType::Integer => "integer",
            SchemaType::String => "string",
            SchemaType::Boolean => "boolean",
            SchemaType::Null => "null",
        })
    }
}

/// `type:` accepts one name or a list of names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeSet(pub Vec<SchemaType>);

impl TypeSet {
    pub fn one(t: SchemaType) -> Self {
        Self(vec![t])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn accepts(&self, node: &DocNode) -> bool {
        self.0.is_empty() || self.0.iter().any(|t| t.accepts(node))
    }

    pub fn contains(&self, t: SchemaType) -> bool {
        self.0.contains(&t)
    }

    fn describe(&self) -> String {
        self.0.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" or ")
    }
}

impl Serialize for TypeSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.as_slice() {
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for TypeSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany {
            One(SchemaType),
            Many(Vec<SchemaType>),
        }
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(t) => TypeSet(vec![t]),
            OneOrMany::Many(v) => TypeSet(v),
        })
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSchema {
    #[serde(rename = "type", default, skip_serializing_if = "TypeSet::is_empty")]
    pub types: TypeSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, NodeSchema>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
    #[serde(
        rename = "additionalProperties",
        alias = "additional_properties",
        default = "default_true",
        skip_serializing_if = "is_true"
    )]
    pub additional_properties: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximum: Option<f64>,
    #[serde(rename = "enum", default, skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Box<NodeSchema>>,
}

impl Default for NodeSchema {
    fn default() -> Self {
        Self {
            types: TypeSet::default(),
            title: None,
            description: None,
            properties: BTreeMap::new(),
            required: Vec::new(),
            additional_properties: true,
            minimum: None,
            maximum: None,
            enumeration: None,
            items: None,
        }
    }
}

impl NodeSchema {
    pub fn of_type(t: SchemaType) -> Self {
        Self {
            types: TypeSet::one(t),
            ..Self::default()
        }
    }

    /// Checks the schema's own invariants, recursively.
    pub fn validate(&self) -> Result<(), String> {
        self.validate_at(&DocPath::root())
    }

    fn validate_at(&self, at: &DocPath) -> Result<(), String> {
        let here = |m: &str| format!("schema at `/{at}`: {m}");
        let typed = !self.types.is_empty();
        if typed && !self.types.contains(SchemaType::Object) {
            if !self.properties.is_empty() || !self.required.is_empty() {
                return Err(here("`properties`/`required` need type object"));
            }
            if !self.additional_properties {
                return Err(here("`additionalProperties` needs type object"));
            }
        }
        if typed && !self.types.contains(SchemaType::Array) && self.items.is_some() {
            return Err(here("`items` needs type array"));
        }
        if let (Some(lo), Some(hi)) = (self.minimum, self.maximum) {
            if lo > hi {
                return Err(here("`minimum` exceeds `maximum`"));
            }
        }
        for bound in [self.minimum, self.maximum].into_iter().flatten() {
            if !bound.is_finite() {
                return Err(here("bounds must be finite"));
            }
        }
        if matches!(&self.enumeration, Some(v) if v.is_empty()) {
            return Err(here("`enum` must not be empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.required {
            if !seen.insert(r) {
                return Err(here(&format!("`{r}` is required twice")));
            }
        }
        for (k, s) in &self.properties {
            s.validate_at(&at.child(k.clone()))?;
        }
        if let Some(items) = &self.items {
            items.validate_at(&at.child("*"))?;
        }
        Ok(())
    }
}

/// Which facets a document check enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Nesting only: container shapes, required keys, closed objects.
    Structure,
    /// Every facet, including scalar types, ranges and enumerations.
    Full,
}

/// Validates `doc` (or its subtree at `at`) against `schema`. Every
/// finding carries a path locus into the document.
pub fn check_document(doc: &DocumentTree, schema: &NodeSchema, mode: CheckMode, at: Option<&DocPath>) -> Vec<Finding> {
    let start = at.cloned().unwrap_or_default();
    let mut out = Vec::new();
    match doc.resolve(&start) {
        Some(node) => walk(node, schema, &start, mode, &mut out),
        None => out.push(Finding::new(
            Locus::File,
            None,
            format!("path `/{start}` is absent from the document"),
        )),
    }
    out
}

fn walk(node: &DocNode, schema: &NodeSchema, path: &DocPath, mode: CheckMode, out: &mut Vec<Finding>) {
    let found = SchemaType::of(node);
    let locus = Locus::path(path);
    if !schema.types.accepts(node) {
        let shape_error = found.is_container() || schema.types.0.iter().any(|t| t.is_container());
        if mode == CheckMode::Full || shape_error {
            out.push(Finding::new(
                locus.clone(),
                Some(render(node)),
                format!("expected {}, found {}", schema.types.describe(), found),
            ));
        }
        // Keys nested under a non-object entry are misplaced.
        if let DocNode::Mapping(entries) = node {
            if !schema.types.is_empty() && !schema.types.contains(SchemaType::Object) {
                for (k, v) in entries {
                    out.push(Finding::new(
                        Locus::path(&path.child(k.clone())),
                        Some(render(v)),
                        format!("unexpected property `{k}`"),
                    ));
                }
            }
        }
        return;
    }
    match node {
        DocNode::Mapping(entries) => {
            for r in &schema.required {
                if !entries.iter().any(|(k, _)| k == r) {
                    out.push(Finding::new(
                        locus.clone(),
                        None,
                        format!("missing required property `{r}`"),
                    ));
                }
            }
            for (k, v) in entries {
                let child = path.child(k.clone());
                match schema.properties.get(k) {
                    Some(s) => walk(v, s, &child, mode, out),
                    None if !schema.additional_properties => out.push(Finding::new(
                        Locus::path(&child),
                        Some(render(v)),
                        format!("unexpected property `{k}`"),
                    )),
                    None => {}
                }
            }
        }
        DocNode::Sequence(items) => {
            if let Some(item_schema) = &schema.items {
                for (i, v) in items.iter().enumerate() {
                    walk(v, item_schema, &path.child(i.to_string()), mode, out);
                }
            }
        }
        DocNode::Scalar(v) => {
            if mode == CheckMode::Structure {
                return;
            }
            if let Some(x) = v.as_f64() {
                if let Some(lo) = schema.minimum {
                    if x < lo {
                        out.push(Finding::new(locus.clone(), Some(v.render()), format!("below minimum {lo}")));
                    }
                }
                if let Some(hi) = schema.maximum {
                    if x > hi {
                        out.push(Finding::new(locus.clone(), Some(v.render()), format!("above maximum {hi}")));
                    }
                }
            }
            if let Some(members) = &schema.enumeration {
                if !members.iter().any(|m| (m.0.is_null() && v.is_null()) || m.0.loosely_equals(v)) {
                    out.push(Finding::new(locus, Some(v.render()), "value not in enum"));
                }
            }
        }
    }
}

fn render(node: &DocNode) -> String {
    match node {
        DocNode::Scalar(v) => v.render(),
        other => other.to_json().to_string(),
    }
}

/// Empty iff the file parses; otherwise one file-level finding carrying
/// the parse error.
pub fn check_syntax(path: &Path) -> Vec<Finding> {
    match load_document(path) {
        Ok(_) => Vec::new(),
        Err(e) => vec![Finding::new(Locus::File, None, e.to_string())],
    }
}

pub fn check_syntax_text(name: &str, text: &str) -> Vec<Finding> {
    match parse_document(name, text) {
        Ok(_) => Vec::new(),
        Err(e) => vec![Finding::new(Locus::File, None, e.to_string())],
    }
}
