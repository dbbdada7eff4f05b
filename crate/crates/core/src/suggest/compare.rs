//! Labels each suggestion against an existing spec: same kind and target
//! compared facet by facet, anything else matched by target only.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::ValueType;
use crate::spec::{
    ColumnParams, ColumnSelector, ConstraintDecl, ConstraintKind, CountParams, GuardSpec, ParamValue, RowPairParams,
    Then,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    ExactMatch,
    /// Strictly stronger than its counterpart on the same target.
    Improved,
    /// Weaker than its counterpart, e.g. missing enumeration members.
    Partial,
    /// Overlaps its counterpart but conflicts with it.
    RequiresAdjustment,
    /// No counterpart in the existing spec.
    New,
    /// An existing constraint no suggestion addressed.
    NotInferred,
}

impl Status {
    pub const ALL: [Status; 6] = [
        Status::ExactMatch,
        Status::Improved,
        Status::Partial,
        Status::RequiresAdjustment,
        Status::New,
        Status::NotInferred,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::ExactMatch => "exact_match",
            Status::Improved => "improved",
            Status::Partial => "partial",
            Status::RequiresAdjustment => "requires_adjustment",
            Status::New => "new",
            Status::NotInferred => "not_inferred",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    /// Suggestion id; absent for `not_inferred`.
    pub suggested: Option<String>,
    /// Counterpart id in the existing spec, if any.
    pub existing: Option<String>,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionOutcome {
    pub suggested: Vec<ConstraintDecl>,
    /// One entry per suggestion, then one per unaddressed existing constraint.
    pub comparison: Vec<Comparison>,
}

impl SuggestionOutcome {
    pub fn count(&self, status: Status) -> usize {
        self.comparison.iter().filter(|c| c.status == status).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Facet {
    Equal,
    Stronger,
    Weaker,
    Conflict,
}

/// Named facet verdicts of a suggestion relative to its counterpart.
#[derive(Default)]
struct Verdicts(Vec<(&'static str, Facet)>);

impl Verdicts {
    fn push(&mut self, name: &'static str, f: Facet) {
        self.0.push((name, f));
    }

    fn conflict(name: &'static str) -> Self {
        Self(vec![(name, Facet::Conflict)])
    }

    fn status(&self) -> Status {
        let has = |f: Facet| self.0.iter().any(|(_, x)| *x == f);
        if has(Facet::Conflict) || (has(Facet::Stronger) && has(Facet::Weaker)) {
            Status::RequiresAdjustment
        } else if has(Facet::Stronger) {
            Status::Improved
        } else if has(Facet::Weaker) {
            Status::Partial
        } else {
            Status::ExactMatch
        }
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .filter(|(_, f)| *f != Facet::Equal)
            .map(|(n, f)| {
                let word = match f {
                    Facet::Stronger => "stronger",
                    Facet::Weaker => "weaker",
                    _ => "conflicting",
                };
                format!("{n} {word}")
            })
            .collect();
        if parts.is_empty() {
            "same parameters".into()
        } else {
            parts.join(", ")
        }
    }
}

/// Presence of an optional restriction: having it is stronger.
fn presence<T: PartialEq>(s: &Option<T>, e: &Option<T>) -> Facet {
    match (s, e) {
        (None, None) => Facet::Equal,
        (Some(a), Some(b)) if a == b => Facet::Equal,
        (Some(_), None) => Facet::Stronger,
        (None, Some(_)) => Facet::Weaker,
        _ => Facet::Conflict,
    }
}

/// A flag that restricts when true.
fn flag(s: bool, e: bool) -> Facet {
    match (s, e) {
        (true, false) => Facet::Stronger,
        (false, true) => Facet::Weaker,
        _ => Facet::Equal,
    }
}

fn type_facet(s: Option<ValueType>, e: Option<ValueType>) -> Facet {
    use ValueType as T;
    let s = s.unwrap_or(T::Text);
    let e = e.unwrap_or(T::Text);
    match (s, e) {
        _ if s == e => Facet::Equal,
        (T::Integer, T::Real) => Facet::Stronger,
        (T::Real, T::Integer) => Facet::Weaker,
        (_, T::Text) => Facet::Stronger,
        (T::Text, _) => Facet::Weaker,
        _ => Facet::Conflict,
    }
}

/// An effective bound: literal value and strictness, or a symbolic one.
#[derive(PartialEq)]
enum Bound<'a> {
    Literal(f64, bool),
    Symbolic(Vec<&'a ParamValue>),
}

fn bound<'a>(inclusive: &'a Option<ParamValue>, strict: &'a Option<ParamValue>, lower: bool) -> Option<Bound<'a>> {
    let parts: Vec<(&ParamValue, bool)> = [(inclusive, false), (strict, true)]
        .into_iter()
        .filter_map(|(p, s)| p.as_ref().map(|p| (p, s)))
        .collect();
    if parts.is_empty() {
        return None;
    }
    if parts.iter().any(|(p, _)| p.as_literal().is_none()) {
        return Some(Bound::Symbolic(parts.iter().map(|(p, _)| *p).collect()));
    }
    let tighter = |a: (f64, bool), b: (f64, bool)| {
        let key = |(v, s): (f64, bool)| if lower { (v, s) } else { (-v, s) };
        if key(a).0 > key(b).0 || (key(a).0 == key(b).0 && a.1) {
            a
        } else {
            b
        }
    };
    let (v, s) = parts
        .iter()
        .map(|(p, s)| (p.as_literal().expect("literal"), *s))
        .reduce(tighter)
        .expect("non-empty");
    Some(Bound::Literal(v, s))
}

fn bound_facet(s: Option<Bound>, e: Option<Bound>, lower: bool) -> Facet {
    match (s, e) {
        (None, None) => Facet::Equal,
        (Some(_), None) => Facet::Stronger,
        (None, Some(_)) => Facet::Weaker,
        (Some(Bound::Literal(a, sa)), Some(Bound::Literal(b, sb))) => {
            if a == b {
                flag(sa, sb)
            } else if (a > b) == lower {
                Facet::Stronger
            } else {
                Facet::Weaker
            }
        }
        (Some(a), Some(b)) if a == b => Facet::Equal,
        _ => Facet::Conflict,
    }
}

/// Enumerations: listing more of the valid members is an improvement,
/// missing members makes a suggestion partial.
fn isin_facet(s: &Option<Vec<String>>, e: &Option<Vec<String>>) -> Facet {
    match (s, e) {
        (Some(a), Some(b)) => {
            let a: BTreeSet<&str> = a.iter().map(|x| x.trim()).collect();
            let b: BTreeSet<&str> = b.iter().map(|x| x.trim()).collect();
            if a == b {
                Facet::Equal
            } else if a.is_superset(&b) {
                Facet::Stronger
            } else if a.is_subset(&b) {
                Facet::Weaker
            } else {
                Facet::Conflict
            }
        }
        _ => presence(s, e),
    }
}

fn column_verdicts(s: &ColumnParams, e: &ColumnParams, out: &mut Verdicts) {
    if s.column != e.column {
        out.push("column", Facet::Conflict);
        return;
    }
    out.push("type", type_facet(s.expected_type, e.expected_type));
    out.push("non-null", flag(!s.nullable, !e.nullable));
    out.push("unique", flag(s.unique, e.unique));
    out.push("strict typing", flag(!s.coerce, !e.coerce));
    out.push("lower bound", bound_facet(bound(&s.ge, &s.gt, true), bound(&e.ge, &e.gt, true), true));
    out.push("upper bound", bound_facet(bound(&s.le, &s.lt, false), bound(&e.le, &e.lt, false), false));
    out.push("isin", isin_facet(&s.isin, &e.isin));
    out.push("in_reference", presence(&s.in_reference, &e.in_reference));
    out.push("regex", presence(&s.regex, &e.regex));
}

fn count_verdicts(s: &CountParams, e: &CountParams, out: &mut Verdicts) {
    let min = |p: &CountParams| p.min.map(|v| ParamValue::Number(v as f64));
    let max = |p: &CountParams| p.max.map(|v| ParamValue::Number(v as f64));
    let (smin, emin, smax, emax) = (min(s), min(e), max(s), max(e));
    let none = None;
    out.push("min", bound_facet(bound(&smin, &none, true), bound(&emin, &none, true), true));
    out.push("max", bound_facet(bound(&smax, &none, false), bound(&emax, &none, false), false));
}

fn kind_verdicts(s: &ConstraintKind, e: &ConstraintKind) -> Verdicts {
    use ConstraintKind as K;
    let mut v = Verdicts::default();
    match (s, e) {
        (K::Column(a), K::Column(b)) => column_verdicts(a, b, &mut v),
        (K::DynamicColumns(a), K::DynamicColumns(b)) if a.selector == b.selector => {
            column_verdicts(&a.template, &b.template, &mut v)
        }
        (K::Conditional(a), K::Conditional(b)) if a.when == b.when && a.on_columns == b.on_columns => {
            match (&a.then, &b.then) {
                (Then::Check(x), Then::Check(y)) => column_verdicts(x, y, &mut v),
                (x, y) if x == y => v.push("then", Facet::Equal),
                _ => v.push("then", Facet::Conflict),
            }
        }
        (K::Summation(a), K::Summation(b)) if a.axis == b.axis && a.columns == b.columns && a.target == b.target => {
            let f = if a.tolerance == b.tolerance {
                Facet::Equal
            } else if a.tolerance < b.tolerance {
                Facet::Stronger
            } else {
                Facet::Weaker
            };
            v.push("tolerance", f);
        }
        (K::RowCount(a), K::RowCount(b)) | (K::FileCount(a), K::FileCount(b)) => count_verdicts(a, b, &mut v),
        (K::ConfigGate(a), K::ConfigGate(b)) if a.gate == b.gate => return kind_verdicts(&a.constraint, &b.constraint),
        _ if s == e => v.push("params", Facet::Equal),
        _ if s.name() == e.name() => v.push("params", Facet::Conflict),
        _ => return Verdicts::conflict("kind"),
    }
    v
}

fn stem(path: &str) -> String {
    let base = path.rsplit('/').next().unwrap_or(path);
    let base = base.rsplit_once('.').map(|(s, _)| s).filter(|s| !s.is_empty()).unwrap_or(base);
    base.replace(['[', ']'], "").to_lowercase()
}

fn file_key(spec: &GuardSpec, on: &str) -> String {
    stem(spec.selector_glob(on))
}

fn selector_key(s: &ColumnSelector) -> String {
    serde_json::to_string(s).expect("selector serializes")
}

/// What a constraint is about, independent of how it checks it.
fn target(kind: &ConstraintKind) -> String {
    use ConstraintKind as K;
    match kind {
        K::Column(p) => format!("column:{}", p.column.as_deref().unwrap_or("")),
        K::Conditional(p) => match &p.then {
            Then::Predicate(pred) => format!("column:{}", pred.column),
            Then::Check(c) => format!("column:{}", c.column.as_deref().unwrap_or("")),
        },
        K::Stepwise(p) => format!("column:{}", p.column),
        K::TemporalWindow(p) => format!("column:{}", p.column),
        K::FirstValueApplies(p) => format!("column:{}", p.column),
        K::DynamicColumns(p) => format!("columns:{}", selector_key(&p.selector)),
        K::Summation(p) => format!("sum:{}", selector_key(&p.columns)),
        K::RowPairs(p) => {
            let mut cols = match p {
                RowPairParams::DistinctFields(c) | RowPairParams::OrderedFields(c) => c.clone(),
                RowPairParams::UniqueRows { columns, .. } => columns.clone(),
            };
            cols.sort();
            format!("rows:{}", cols.join(","))
        }
        K::ColumnsPresent(_) => "columns_present".into(),
        K::RowCount(_) => "row_count".into(),
        K::FileCount(_) => "file_count".into(),
        K::ForeignKey(p) => format!("references:{}->{}", p.columns.join(","), stem(&p.other_file)),
        K::Connectivity(p) => format!("connected:{}", p.node_column),
        K::ConfigGate(p) => target(&p.constraint),
        K::DocumentNesting(p) | K::DocumentSchema(p) => format!("document:{}", p.at.as_deref().unwrap_or("")),
        K::Syntax(_) => "syntax".into(),
    }
}

fn rank(s: Status) -> u8 {
    match s {
        Status::ExactMatch => 0,
        Status::Improved => 1,
        Status::Partial => 2,
        _ => 3,
    }
}

/// Labels every suggestion, then every existing constraint no suggestion
/// shares a target with. Same-kind pairs are compared facet by facet;
/// different kinds on one target always need adjustment.
pub fn compare_with_spec(suggested: &[ConstraintDecl], existing: &GuardSpec) -> SuggestionOutcome {
    let keys: Vec<(String, String)> = existing
        .constraints
        .iter()
        .map(|c| (file_key(existing, &c.on), target(&c.kind)))
        .collect();
    let mut covered = vec![false; existing.constraints.len()];
    let mut comparison = Vec::new();
    for s in suggested {
        let key = (file_key(existing, &s.on), target(&s.kind));
        let candidates: Vec<usize> = (0..keys.len()).filter(|&i| keys[i] == key).collect();
        if candidates.is_empty() {
            comparison.push(Comparison {
                suggested: Some(s.id.clone()),
                existing: None,
                status: Status::New,
                detail: format!("no existing constraint on {} {}", key.0, key.1),
            });
            continue;
        }
        let best = candidates
            .iter()
            .map(|&i| (i, kind_verdicts(&s.kind, &existing.constraints[i].kind)))
            .min_by_key(|(i, v)| (rank(v.status()), *i))
            .expect("non-empty");
        for &i in &candidates {
            covered[i] = true;
        }
        let (i, verdicts) = best;
        let status = verdicts.status();
        let detail = if status == Status::RequiresAdjustment && s.kind.name() != existing.constraints[i].kind.name() {
            format!("{} where `{}` is {}", s.kind.name(), existing.constraints[i].id, existing.constraints[i].kind.name())
        } else {
            verdicts.describe()
        };
        comparison.push(Comparison {
            suggested: Some(s.id.clone()),
            existing: Some(existing.constraints[i].id.clone()),
            status,
            detail,
        });
    }
    for (i, c) in existing.constraints.iter().enumerate() {
        if !covered[i] {
            comparison.push(Comparison {
                suggested: None,
                existing: Some(c.id.clone()),
                status: Status::NotInferred,
                detail: format!("no suggestion targets {} {}", keys[i].0, keys[i].1),
            });
        }
    }
    SuggestionOutcome {
        suggested: suggested.to_vec(),
        comparison,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{ConditionalParams, Predicate, PredicateOp, Scalar, When};
    use crate::model::CellValue;

    fn col(column: &str, f: impl FnOnce(&mut ColumnParams)) -> ConstraintKind {
        let mut p = ColumnParams {
            expected_type: Some(ValueType::Real),
            ..ColumnParams::for_column(column)
        };
        f(&mut p);
        ConstraintKind::Column(p)
    }

    fn spec_with(decls: Vec<ConstraintDecl>) -> GuardSpec {
        let mut spec = GuardSpec::new("manual");
        spec.files.insert("locations".into(), "locations.csv".into());
        spec.files.insert("closures".into(), "closures.csv".into());
        spec.constraints = decls;
        spec
    }

    fn num(v: f64) -> Option<ParamValue> {
        Some(ParamValue::Number(v))
    }

    fn one(s: ConstraintDecl, e: ConstraintDecl) -> Status {
        compare_with_spec(&[s], &spec_with(vec![e])).comparison[0].status
    }

    #[test]
    fn latitude_tightened_is_improved() {
        let e = ConstraintDecl::new("lat", "locations", col("latitude", |p| {
            p.ge = num(-180.0);
            p.le = num(180.0);
        }));
        let s = ConstraintDecl::new("lat_s", "locations", col("latitude", |p| {
            p.ge = num(-90.0);
            p.le = num(90.0);
        }));
        assert_eq!(one(s.clone(), e.clone()), Status::Improved);
        assert_eq!(one(e, s), Status::Partial);
    }

    #[test]
    fn missing_enum_members_is_partial() {
        let members = |m: &[&str]| Some(m.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        let e = ConstraintDecl::new("lt", "locations", col("location_type", |p| {
            p.expected_type = Some(ValueType::Text);
            p.isin = members(&["conflict_zone", "town", "camp", "marker", "idpcamp"]);
        }));
        let s = ConstraintDecl::new("lt_s", "locations.csv", col("location_type", |p| {
            p.expected_type = Some(ValueType::Text);
            p.isin = members(&["conflict_zone", "town", "camp"]);
        }));
        assert_eq!(one(s, e), Status::Partial);
    }

    #[test]
    fn uniform_rule_against_conditional_needs_adjustment() {
        let e = ConstraintDecl::new(
            "pop_conflict",
            "locations",
            ConstraintKind::Conditional(ConditionalParams {
                when: When::One(Predicate {
                    column: "location_type".into(),
                    op: PredicateOp::Eq,
                    value: Some(Scalar(CellValue::Text("conflict_zone".into()))),
                    values: None,
                }),
                then: Then::Check(Box::new(ColumnParams {
                    gt: num(0.0),
                    ..ColumnParams::for_column("population")
                })),
                on_columns: vec![],
            }),
        );
        let s = ConstraintDecl::new("pop_s", "locations", col("population", |p| p.ge = num(0.0)));
        let out = compare_with_spec(&[s], &spec_with(vec![e]));
        assert_eq!(out.comparison[0].status, Status::RequiresAdjustment);
        assert_eq!(out.comparison[0].existing.as_deref(), Some("pop_conflict"));
    }

    #[test]
    fn exact_new_and_not_inferred() {
        let e1 = ConstraintDecl::new("fr", "routes", col("forced_redirection", |p| {
            p.expected_type = Some(ValueType::Integer);
            p.isin = Some(vec!["0".into(), "1".into(), "2".into()]);
        }));
        let e2 = ConstraintDecl::new("cc", "locations", col("country", |_| {}));
        let s1 = ConstraintDecl::new("s1", "routes", e1.kind.clone());
        let s2 = ConstraintDecl::new("s2", "routes", col("distance", |p| p.gt = num(0.0)));
        let mut spec = spec_with(vec![e1, e2]);
        spec.files.insert("routes".into(), "data/routes.csv".into());
        let out = compare_with_spec(&[s1, s2], &spec);
        let statuses: Vec<Status> = out.comparison.iter().map(|c| c.status).collect();
        assert_eq!(statuses, vec![Status::ExactMatch, Status::New, Status::NotInferred]);
        assert_eq!(out.count(Status::NotInferred), 1);
    }

    #[test]
    fn unique_and_non_null_is_improved() {
        let e = ConstraintDecl::new("name", "locations", col("name", |p| {
            p.expected_type = Some(ValueType::Text);
            p.unique = true;
            p.nullable = true;
        }));
        let s = ConstraintDecl::new("name_s", "locations", col("name", |p| {
            p.expected_type = Some(ValueType::Text);
            p.unique = true;
        }));
        assert_eq!(one(s, e), Status::Improved);
    }

    #[test]
    fn mixed_facets_conflict() {
        let e = ConstraintDecl::new("d", "routes", col("distance", |p| p.gt = num(0.0)));
        let s = ConstraintDecl::new("d_s", "routes", col("distance", |p| {
            p.ge = num(0.0);
            p.le = num(1000.0);
        }));
        assert_eq!(one(s, e), Status::RequiresAdjustment);
    }

    #[test]
    fn labels_serialize_snake_case() {
        let names: Vec<String> = Status::ALL.iter().map(|s| serde_json::to_value(s).unwrap().as_str().unwrap().to_string()).collect();
        assert_eq!(names, ["exact_match", "improved", "partial", "requires_adjustment", "new", "not_inferred"]);
        assert!(Status::ALL.iter().all(|s| serde_json::to_value(s).unwrap() == s.as_str()));
    }
}
