//! Constraint declarations: kinds, their parameter records, and the
//! kind-specific parameter validation run before any evaluation.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hierarchical::NodeSchema;
use crate::model::{CellValue, DocPath, Severity, ValueType};
use crate::pattern::PatternCode;

/// A numeric or text parameter: a literal, a config binding, or a key in
/// a reference table.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Config { config: String },
    Reference { reference: String, key: String },
    Text(String),
}

impl ParamValue {
    pub fn as_literal(&self) -> Option<f64> {
        match self {
            ParamValue::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            ParamValue::Number(n) if n.fract() == 0.0 && n.abs() < 9.0e15 => s.serialize_i64(*n as i64),
            ParamValue::Number(n) => s.serialize_f64(*n),
            ParamValue::Text(t) => s.serialize_str(t),
            ParamValue::Config { config } => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("config", config)?;
                m.end()
            }
            ParamValue::Reference { reference, key } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("reference", reference)?;
                m.serialize_entry("key", key)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for ParamValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .filter(|f| f.is_finite())
                .map(ParamValue::Number)
                .ok_or_else(|| D::Error::custom("number out of range")),
            serde_json::Value::String(s) => Ok(ParamValue::Text(s.clone())),
            serde_json::Value::Object(m) => {
                let text = |k: &str| m.get(k).and_then(|x| x.as_str()).map(str::to_string);
                match (text("config"), text("reference"), text("key"), m.len()) {
                    (Some(config), None, None, 1) => Ok(ParamValue::Config { config }),
                    (None, Some(reference), Some(key), 2) => Ok(ParamValue::Reference { reference, key }),
                    _ => Err(D::Error::custom(
                        "expected a number, text, {config: name} or {reference: table, key: k}",
                    )),
                }
            }
            _ => Err(D::Error::custom("expected a number, text, {config} or {reference, key}")),
        }
    }
}

/// A scalar literal in a spec (predicate operands, enum members).
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar(pub CellValue);

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            CellValue::Null => s.serialize_unit(),
            CellValue::Integer(i) => s.serialize_i64(*i),
            CellValue::Real(r) => s.serialize_f64(*r),
            CellValue::Boolean(b) => s.serialize_bool(*b),
            CellValue::Text(t) => s.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        json_scalar(&serde_json::Value::deserialize(d)?)
            .map(Scalar)
            .ok_or_else(|| D::Error::custom("expected a scalar"))
    }
}

pub(crate) fn json_scalar(v: &serde_json::Value) -> Option<CellValue> {
    use serde_json::Value;
    Some(match v {
        Value::Null => CellValue::Null,
        Value::Bool(b) => CellValue::Boolean(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => CellValue::Integer(i),
            None => CellValue::Real(n.as_f64().filter(|f| f.is_finite())?),
        },
        Value::String(s) => CellValue::Text(s.clone()),
        _ => return None,
    })
}

fn text_list<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
    let items = Option::<Vec<Scalar>>::deserialize(d)?;
    Ok(items.map(|v| v.into_iter().map(|s| s.0.render()).collect()))
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_true() -> bool {
    true
}

/// Per-cell checks on one column (also the template for dynamic columns).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_type: Option<ValueType>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub nullable: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unique: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<ParamValue>,
    #[serde(default, deserialize_with = "text_list", skip_serializing_if = "Option::is_none")]
    pub isin: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub coerce: bool,
}

impl ColumnParams {
    pub fn for_column(column: impl Into<String>) -> Self {
        Self {
            column: Some(column.into()),
            ..Self::default()
        }
    }

    pub fn has_bounds(&self) -> bool {
        self.ge.is_some() || self.gt.is_some() || self.le.is_some() || self.lt.is_some()
    }

    fn validate(&self, needs_column: bool) -> Result<(), String> {
        match (&self.column, needs_column) {
            (None, true) => return Err("`column` is required".into()),
            (Some(c), true) if c.trim().is_empty() => return Err("`column` is empty".into()),
            (Some(_), false) => return Err("a column template must not name a column".into()),
            _ => {}
        }
        let any_check = self.expected_type.is_some()
            || self.unique
            || self.has_bounds()
            || self.isin.is_some()
            || self.in_reference.is_some()
            || self.regex.is_some()
            || !self.nullable;
        if !any_check {
            return Err("at least one check is required".into());
        }
        if self.has_bounds() && !matches!(self.expected_type, Some(ValueType::Integer | ValueType::Real)) {
            return Err("bounds require expected_type integer or real".into());
        }
        if self.coerce && self.expected_type.is_none() {
            return Err("coerce requires expected_type".into());
        }
        for b in [&self.ge, &self.gt, &self.le, &self.lt].into_iter().flatten() {
            if let ParamValue::Text(t) = b {
                return Err(format!("bound `{t}` is not numeric"));
            }
        }
        if let (Some(lo), Some(hi)) = (
            self.ge.as_ref().or(self.gt.as_ref()).and_then(ParamValue::as_literal),
            self.le.as_ref().or(self.lt.as_ref()).and_then(ParamValue::as_literal),
        ) {
            if lo > hi {
                return Err(format!("lower bound {lo} exceeds upper bound {hi}"));
            }
        }
        if matches!(&self.isin, Some(v) if v.is_empty()) {
            return Err("`isin` must not be empty".into());
        }
        if let Some(r) = &self.regex {
            regex::Regex::new(r).map_err(|e| format!("bad regex: {e}"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateOp {
    Eq,
    Neq,
    In,
    Notin,
    Isnull,
    Notnull,
}

/// A row predicate over one column. Null never satisfies a value
/// comparison (`eq`, `neq`, `in`, `notin`); it satisfies `isnull`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    pub column: String,
    pub op: PredicateOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Scalar>>,
}

impl Predicate {
    pub fn eval(&self, cell: &CellValue) -> bool {
        match self.op {
            PredicateOp::Isnull => cell.is_null(),
            PredicateOp::Notnull => !cell.is_null(),
            _ if cell.is_null() => false,
            PredicateOp::Eq => self.value.as_ref().is_some_and(|v| cell.loosely_equals(&v.0)),
            PredicateOp::Neq => self.value.as_ref().is_some_and(|v| !cell.loosely_equals(&v.0)),
            PredicateOp::In => self.values.iter().flatten().any(|v| cell.loosely_equals(&v.0)),
            PredicateOp::Notin => !self.values.iter().flatten().any(|v| cell.loosely_equals(&v.0)),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let needs_value = matches!(self.op, PredicateOp::Eq | PredicateOp::Neq);
        let needs_values = matches!(self.op, PredicateOp::In | PredicateOp::Notin);
        if needs_value != self.value.is_some() {
            return Err(format!("predicate on `{}`: `value` mismatch for op", self.column));
        }
        if needs_values != self.values.is_some() {
            return Err(format!("predicate on `{}`: `values` mismatch for op", self.column));
        }
        Ok(())
    }
}

/// One predicate or a conjunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum When {
    One(Predicate),
    All(Vec<Predicate>),
}

impl When {
    pub fn predicates(&self) -> &[Predicate] {
        match self {
            When::One(p) => std::slice::from_ref(p),
            When::All(v) => v,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.predicates().is_empty() {
            return Err("`when` must hold at least one predicate".into());
        }
        self.predicates().iter().try_for_each(Predicate::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Then {
    Predicate(Predicate),
    Check(Box<ColumnParams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalParams {
    pub when: When,
    pub then: Then,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub on_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepwiseParams {
    pub column: String,
    pub min: ParamValue,
    pub max: ParamValue,
    pub step: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub require_contiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSelector {
    #[default]
    AllButFirst,
    All,
    Regex(String),
    Columns(Vec<String>),
}

impl ColumnSelector {
    /// Columns of `names` picked by the selector, in table order.
    pub fn select<'a>(&self, names: &'a [String]) -> Vec<&'a str> {
        match self {
            ColumnSelector::AllButFirst => names.iter().skip(1).map(String::as_str).collect(),
            ColumnSelector::All => names.iter().map(String::as_str).collect(),
            ColumnSelector::Regex(r) => match regex::Regex::new(r) {
                Ok(re) => names.iter().filter(|n| re.is_match(n)).map(String::as_str).collect(),
                Err(_) => Vec::new(),
            },
            ColumnSelector::Columns(cols) => names
                .iter()
                .filter(|n| cols.contains(n))
                .map(String::as_str)
                .collect(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            ColumnSelector::Regex(r) => regex::Regex::new(r).map(|_| ()).map_err(|e| format!("bad regex: {e}")),
            ColumnSelector::Columns(c) if c.is_empty() => Err("column list must not be empty".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicColumnsParams {
    pub selector: ColumnSelector,
    pub template: ColumnParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumAxis {
    PerColumn,
    PerRow,
}

fn default_tolerance() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummationParams {
    pub axis: SumAxis,
    #[serde(default)]
    pub columns: ColumnSelector,
    pub target: ParamValue,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RowPairParams {
    /// value(a) != value(b) on every row.
    DistinctFields(Vec<String>),
    /// value(a) < value(b) whenever both are present.
    OrderedFields(Vec<String>),
    /// No repeated key; `unordered` treats (a, b) and (b, a) as equal.
    UniqueRows {
        columns: Vec<String>,
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        unordered: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnsPresentParams {
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub non_null: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<u64>,
}

impl CountParams {
    fn validate(&self) -> Result<(), String> {
        match (self.min, self.max) {
            (None, None) => Err("`min` or `max` is required".into()),
            (Some(a), Some(b)) if a > b => Err("`min` exceeds `max`".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstValueParams {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<When>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForeignKeyParams {
    pub columns: Vec<String>,
    pub other_file: String,
    pub other_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<When>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivityParams {
    pub node_column: String,
    pub edge_file: String,
    pub endpoint_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOp {
    Eq,
    Neq,
    Exists,
    NotExists,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub path: String,
    pub op: GateOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
}

impl Gate {
    pub fn doc_path(&self) -> DocPath {
        self.path.parse().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigGateParams {
    pub gate: Gate,
    pub constraint: Box<ConstraintKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalWindowParams {
    pub column: String,
    pub not_before: ParamValue,
}

/// A schema given inline or as a path relative to the guard spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Path(String),
    Inline(Box<NodeSchema>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentParams {
    pub schema: SchemaSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SyntaxParams {}

/// Every built-in constraint kind with its parameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ConstraintKind {
    Column(ColumnParams),
    ColumnsPresent(ColumnsPresentParams),
    Conditional(ConditionalParams),
    Stepwise(StepwiseParams),
    DynamicColumns(DynamicColumnsParams),
    Summation(SummationParams),
    RowPairs(RowPairParams),
    RowCount(CountParams),
    FirstValueApplies(FirstValueParams),
    ForeignKey(ForeignKeyParams),
    Connectivity(ConnectivityParams),
    ConfigGate(ConfigGateParams),
    TemporalWindow(TemporalWindowParams),
    DocumentNesting(DocumentParams),
    DocumentSchema(DocumentParams),
    Syntax(SyntaxParams),
    FileCount(CountParams),
}

impl ConstraintKind {
    pub const NAMES: [&'static str; 17] = [
        "column",
        "columns_present",
        "conditional",
        "stepwise",
        "dynamic_columns",
        "summation",
        "row_pairs",
        "row_count",
        "first_value_applies",
        "foreign_key",
        "connectivity",
        "config_gate",
        "temporal_window",
        "document_nesting",
        "document_schema",
        "syntax",
        "file_count",
    ];

    pub fn name(&self) -> &'static str {
        use ConstraintKind as K;
        match self {
            K::Column(_) => "column",
            K::ColumnsPresent(_) => "columns_present",
            K::Conditional(_) => "conditional",
            K::Stepwise(_) => "stepwise",
            K::DynamicColumns(_) => "dynamic_columns",
            K::Summation(_) => "summation",
            K::RowPairs(_) => "row_pairs",
            K::RowCount(_) => "row_count",
            K::FirstValueApplies(_) => "first_value_applies",
            K::ForeignKey(_) => "foreign_key",
            K::Connectivity(_) => "connectivity",
            K::ConfigGate(_) => "config_gate",
            K::TemporalWindow(_) => "temporal_window",
            K::DocumentNesting(_) => "document_nesting",
            K::DocumentSchema(_) => "document_schema",
            K::Syntax(_) => "syntax",
            K::FileCount(_) => "file_count",
        }
    }

    pub fn default_severity(&self) -> Severity {
        match self {
            ConstraintKind::Connectivity(_) => Severity::Warning,
            _ => Severity::Error,
        }
    }

    /// Kind-specific parameter validation.
    pub fn validate(&self) -> Result<(), String> {
        use ConstraintKind as K;
        let distinct = |cols: &[String], n: Option<usize>| -> Result<(), String> {
            if cols.is_empty() {
                return Err("column list must not be empty".into());
            }
            if let Some(n) = n {
                if cols.len() != n {
                    return Err(format!("expected exactly {n} columns"));
                }
            }
            let mut sorted: Vec<&String> = cols.iter().collect();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != cols.len() {
                return Err("referenced columns must be distinct".into());
            }
            Ok(())
        };
        match self {
            K::Column(p) => p.validate(true),
            K::ColumnsPresent(p) => distinct(&p.columns, None),
            K::Conditional(p) => {
                p.when.validate()?;
                match &p.then {
                    Then::Predicate(pred) => pred.validate(),
                    Then::Check(c) => {
                        if c.unique {
                            return Err("`unique` is not allowed in a conditional `then`".into());
                        }
                        c.validate(true)
                    }
                }
            }
            K::Stepwise(p) => {
                if !(p.step.is_finite() && p.step > 0.0) {
                    return Err("`step` must be a positive number".into());
                }
                for v in [&p.min, &p.max] {
                    if let ParamValue::Text(t) = v {
                        return Err(format!("`{t}` is not numeric"));
                    }
                }
                if let (Some(a), Some(b)) = (p.min.as_literal(), p.max.as_literal()) {
                    if a > b {
                        return Err("`min` exceeds `max`".into());
                    }
                }
                Ok(())
            }
            K::DynamicColumns(p) => {
                p.selector.validate()?;
                p.template.validate(false)
            }
            K::Summation(p) => {
                p.columns.validate()?;
                if !(p.tolerance.is_finite() && p.tolerance >= 0.0) {
                    return Err("`tolerance` must be finite and >= 0".into());
                }
                if let ParamValue::Text(t) = &p.target {
                    return Err(format!("target `{t}` is not numeric"));
                }
                Ok(())
            }
            K::RowPairs(p) => match p {
                RowPairParams::DistinctFields(c) | RowPairParams::OrderedFields(c) => distinct(c, Some(2)),
                RowPairParams::UniqueRows { columns, .. } => distinct(columns, None),
            },
            K::RowCount(p) | K::FileCount(p) => p.validate(),
            K::FirstValueApplies(p) => match &p.when {
                Some(w) => w.validate(),
                None => Ok(()),
            },
            K::ForeignKey(p) => {
                if p.columns.is_empty() || p.other_columns.is_empty() {
                    return Err("column lists must not be empty".into());
                }
                if p.other_file.trim().is_empty() {
                    return Err("`other_file` is empty".into());
                }
                match &p.when {
                    Some(w) => w.validate(),
                    None => Ok(()),
                }
            }
            K::Connectivity(p) => {
                if p.endpoint_columns.is_empty() {
                    return Err("`endpoint_columns` must not be empty".into());
                }
                Ok(())
            }
            K::ConfigGate(p) => {
                p.gate.path.parse::<DocPath>()?;
                let needs_value = matches!(p.gate.op, GateOp::Eq | GateOp::Neq);
                if needs_value != p.gate.value.is_some() {
                    return Err("gate `value` is required exactly for eq/neq".into());
                }
                if matches!(*p.constraint, K::FileCount(_)) {
                    return Err("file_count cannot be gated".into());
                }
                p.constraint.validate()
            }
            K::TemporalWindow(_) => Ok(()),
            K::DocumentNesting(p) | K::DocumentSchema(p) => {
                if let Some(at) = &p.at {
                    at.parse::<DocPath>()?;
                }
                match &p.schema {
                    SchemaSource::Inline(s) => s.validate(),
                    SchemaSource::Path(path) if path.trim().is_empty() => Err("schema path is empty".into()),
                    SchemaSource::Path(_) => Ok(()),
                }
            }
            K::Syntax(_) => Ok(()),
        }
    }

    /// Visits every parameter value, including those of a gated kind.
    pub fn param_values(&self) -> Vec<&ParamValue> {
        use ConstraintKind as K;
        fn col(p: &ColumnParams) -> Vec<&ParamValue> {
            [&p.ge, &p.gt, &p.le, &p.lt].into_iter().flatten().collect()
        }
        match self {
            K::Column(p) => col(p),
            K::Conditional(ConditionalParams { then: Then::Check(c), .. }) => col(c),
            K::Stepwise(p) => vec![&p.min, &p.max],
            K::DynamicColumns(p) => col(&p.template),
            K::Summation(p) => vec![&p.target],
            K::TemporalWindow(p) => vec![&p.not_before],
            K::ConfigGate(p) => p.constraint.param_values(),
            _ => Vec::new(),
        }
    }

    /// Logical names of sibling files this kind reads.
    pub fn sibling_names(&self) -> Vec<&str> {
        match self {
            ConstraintKind::ForeignKey(p) => vec![p.other_file.as_str()],
            ConstraintKind::Connectivity(p) => vec![p.edge_file.as_str()],
            ConstraintKind::ConfigGate(p) => p.constraint.sibling_names(),
            _ => Vec::new(),
        }
    }

    /// Reference tables named directly (not through parameter values).
    pub fn reference_names(&self) -> Vec<&str> {
        match self {
            ConstraintKind::Column(p) => p.in_reference.iter().map(String::as_str).collect(),
            ConstraintKind::DynamicColumns(p) => p.template.in_reference.iter().map(String::as_str).collect(),
            ConstraintKind::Conditional(ConditionalParams { then: Then::Check(c), .. }) => {
                c.in_reference.iter().map(String::as_str).collect()
            }
            ConstraintKind::ConfigGate(p) => p.constraint.reference_names(),
            _ => Vec::new(),
        }
    }
}

/// One declared constraint bound to a file selector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDecl {
    pub id: String,
    /// Logical file name from the guard spec's `files` map, or a glob.
    pub on: String,
    pub kind: ConstraintKind,
    pub severity: Severity,
    /// Explicit pattern code; derived by classification when absent.
    pub pattern: Option<PatternCode>,
    /// Free-form comment emitted above the entry (provenance).
    pub note: Option<String>,
}

impl ConstraintDecl {
    pub fn new(id: impl Into<String>, on: impl Into<String>, kind: ConstraintKind) -> Self {
        let severity = kind.default_severity();
        Self {
            id: id.into(),
            on: on.into(),
            kind,
            severity,
            pattern: None,
            note: None,
        }
    }

    /// Builds a declaration from one `constraints:` list entry.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        let obj = value.as_object().ok_or("constraint entry must be a mapping")?;
        for key in obj.keys() {
            if !["id", "kind", "on", "params", "severity", "pattern"].contains(&key.as_str()) {
                return Err(format!("unknown field `{key}`"));
            }
        }
        let text = |k: &str| -> Result<String, String> {
            obj.get(k)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| format!("missing or non-text `{k}`"))
        };
        let id = text("id")?;
        let on = text("on").map_err(|e| format!("{id}: {e}"))?;
        let kind_name = text("kind").map_err(|e| format!("{id}: {e}"))?;
        if !ConstraintKind::NAMES.contains(&kind_name.as_str()) {
            return Err(format!("{id}: unknown constraint kind `{kind_name}`"));
        }
        let params = obj
            .get("params")
            .cloned()
            .unwrap_or_else(|| serde_json::Value::Object(Default::default()));
        let kind: ConstraintKind = serde_json::from_value(serde_json::json!({
            "kind": kind_name,
            "params": params,
        }))
        .map_err(|e| format!("{id}: bad params for `{kind_name}`: {e}"))?;
        kind.validate().map_err(|e| format!("{id}: {e}"))?;
        let severity = match obj.get("severity") {
            None => kind.default_severity(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| format!("{id}: bad severity: {e}"))?,
        };
        let pattern = match obj.get("pattern") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| format!("{id}: pattern must be text"))?
                    .parse::<PatternCode>()
                    .map_err(|e| format!("{id}: {e}"))?,
            ),
        };
        if id.trim().is_empty() {
            return Err("constraint id is empty".into());
        }
        if on.trim().is_empty() {
            return Err(format!("{id}: `on` is empty"));
        }
        Ok(Self {
            id,
            on,
            kind,
            severity,
            pattern,
            note: None,
        })
    }

    /// The entry as it appears in a spec file (`id, kind, on, severity,
    /// pattern, params`).
    pub fn to_json(&self) -> serde_json::Value {
        let tagged = serde_json::to_value(&self.kind).expect("params serialize");
        let mut out = serde_json::Map::new();
        out.insert("id".into(), self.id.clone().into());
        out.insert("kind".into(), tagged["kind"].clone());
        out.insert("on".into(), self.on.clone().into());
        if self.severity != self.kind.default_severity() {
            out.insert("severity".into(), self.severity.to_string().into());
        }
        if let Some(p) = &self.pattern {
            out.insert("pattern".into(), p.to_string().into());
        }
        out.insert("params".into(), tagged["params"].clone());
        serde_json::Value::Object(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn listing_one_population_field() {
        let d = ConstraintDecl::from_json(&json!({
            "id": "pop", "kind": "column", "on": "locations",
            "params": {"column": "population", "expected_type": "real", "ge": 0, "nullable": true, "coerce": true}
        }))
        .unwrap();
        let ConstraintKind::Column(p) = &d.kind else { panic!() };
        assert_eq!(p.ge, Some(ParamValue::Number(0.0)));
        assert!(p.nullable && p.coerce);
        assert_eq!(d.severity, Severity::Error);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let e = ConstraintDecl::from_json(&json!({"id": "x", "kind": "fuzzy", "on": "a"})).unwrap_err();
        assert!(e.contains("unknown constraint kind"));
    }

    #[test]
    fn parameter_validation() {
        let bad = [
            json!({"column": "a", "nullable": true}),
            json!({"column": "a", "ge": 0}),
            json!({"column": "a", "expected_type": "text", "isin": []}),
            json!({"column": "a", "expected_type": "real", "ge": 5, "le": 1}),
            json!({"column": "a", "regex": "("}),
        ];
        for params in bad {
            let r = ConstraintDecl::from_json(&json!({"id": "x", "kind": "column", "on": "f", "params": params}));
            assert!(r.is_err(), "{params}");
        }
        let step = json!({"id": "s", "kind": "stepwise", "on": "f",
            "params": {"column": "Day", "min": 0, "max": 3, "step": 0}});
        assert!(ConstraintDecl::from_json(&step).is_err());
        let pairs = json!({"id": "p", "kind": "row_pairs", "on": "f",
            "params": {"distinct_fields": ["a", "a"]}});
        assert!(ConstraintDecl::from_json(&pairs).is_err());
    }

    #[test]
    fn connectivity_defaults_to_warning() {
        let d = ConstraintDecl::from_json(&json!({"id": "iso", "kind": "connectivity", "on": "locations",
            "params": {"node_column": "name", "edge_file": "routes", "endpoint_columns": ["name1", "name2"]}}))
        .unwrap();
        assert_eq!(d.severity, Severity::Warning);
    }

    #[test]
    fn json_entry_round_trip() {
        let entry = json!({"id": "sum", "kind": "summation", "on": "demo",
            "pattern": "3.A.viii",
            "params": {"axis": "per_row", "columns": "all_but_first", "target": {"reference": "totals", "key": "age"}, "tolerance": 0.01}});
        let d = ConstraintDecl::from_json(&entry).unwrap();
        let back = ConstraintDecl::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn predicate_null_semantics() {
        let eq = Predicate {
            column: "t".into(),
            op: PredicateOp::Eq,
            value: Some(Scalar(CellValue::Text("x".into()))),
            values: None,
        };
        let neq = Predicate { op: PredicateOp::Neq, ..eq.clone() };
        assert!(!eq.eval(&CellValue::Null));
        assert!(!neq.eval(&CellValue::Null));
        let isnull = Predicate { op: PredicateOp::Isnull, value: None, ..eq.clone() };
        assert!(isnull.eval(&CellValue::Null));
        assert!(eq.eval(&CellValue::Text("x".into())));
        let num = Predicate { value: Some(Scalar(CellValue::Integer(1))), ..eq };
        assert!(num.eval(&CellValue::Real(1.0)));
    }
}
