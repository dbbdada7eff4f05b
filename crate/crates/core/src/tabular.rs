//! Within-table checks: single columns, conditionals, stepwise sequences,
//! dynamic columns, summations and row relations.
//!
//! Each check returns raw findings; a missing column becomes one file-level
//! finding naming the column.

use std::collections::{BTreeMap, HashMap, HashSet};

use regex::Regex;

use crate::error::EvalError;
use crate::model::{CellValue, EvaluationContext, Finding, Locus, ReferenceTable, TabularDataset, ValueType};
use crate::spec::{
    ColumnParams, ColumnsPresentParams, ConditionalParams, CountParams, DynamicColumnsParams, FirstValueParams,
    Predicate, RowPairParams, StepwiseParams, SumAxis, SummationParams, Then, When,
};

pub(crate) fn absent(column: &str) -> Finding {
    Finding::new(Locus::File, Some(column.to_string()), format!("column `{column}` absent"))
}

/// Resolves column names to indices; absent names become findings.
pub(crate) fn resolve_columns<'a>(
    ds: &TabularDataset,
    names: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<usize>, Vec<Finding>> {
    let mut idx = Vec::new();
    let mut missing = Vec::new();
    for n in names {
        match ds.column_index(n) {
            Some(i) => idx.push(i),
            None if !missing.iter().any(|f: &Finding| f.offending.as_deref() == Some(n)) => missing.push(absent(n)),
            None => {}
        }
    }
    if missing.is_empty() {
        Ok(idx)
    } else {
        Err(missing)
    }
}

/// A compiled `when` clause.
pub(crate) struct RowFilter<'a> {
    preds: Vec<(usize, &'a Predicate)>,
}

impl<'a> RowFilter<'a> {
    pub(crate) fn new(ds: &TabularDataset, when: Option<&'a When>) -> Result<Self, Vec<Finding>> {
        let preds = when.map(When::predicates).unwrap_or_default();
        let idx = resolve_columns(ds, preds.iter().map(|p| p.column.as_str()))?;
        Ok(Self {
            preds: idx.into_iter().zip(preds.iter()).collect(),
        })
    }

    pub(crate) fn holds(&self, row: &[CellValue]) -> bool {
        self.preds.iter().all(|(i, p)| p.eval(&row[*i]))
    }
}

fn ge_bound(v: &CellValue, b: f64) -> bool {
    matches!(v.compare(&CellValue::Real(b)), Some(o) if o.is_ge())
}

/// A column check with all parameters resolved against the context.
pub struct CellCheck<'a> {
    params: &'a ColumnParams,
    ge: Option<f64>,
    gt: Option<f64>,
    le: Option<f64>,
    lt: Option<f64>,
    isin: Option<Vec<(String, CellValue)>>,
    reference: Option<&'a ReferenceTable>,
    regex: Option<Regex>,
}

impl<'a> CellCheck<'a> {
    pub fn new(params: &'a ColumnParams, ctx: &'a EvaluationContext) -> Result<Self, EvalError> {
        let bound = |b: &Option<crate::spec::ParamValue>| b.as_ref().map(|v| v.resolve_number(ctx)).transpose();
        let regex = match &params.regex {
            Some(r) => Some(Regex::new(&format!("^(?:{r})$")).map_err(|e| EvalError::InvalidParams(e.to_string()))?),
            None => None,
        };
        let isin = params.isin.as_ref().map(|members| {
            members
                .iter()
                .map(|m| (m.clone(), CellValue::infer(m).unwrap_or_else(|_| CellValue::Text(m.clone()))))
                .collect()
        });
        let reference = match &params.in_reference {
            Some(name) => Some(ctx.reference(name)?),
            None => None,
        };
        Ok(Self {
            params,
            ge: bound(&params.ge)?,
            gt: bound(&params.gt)?,
            le: bound(&params.le)?,
            lt: bound(&params.lt)?,
            isin,
            reference,
            regex,
        })
    }

    /// The value after optional coercion, or the failure message.
    pub fn normalize(&self, cell: &CellValue) -> Result<CellValue, String> {
        match (self.params.coerce, self.params.expected_type) {
            (true, Some(t)) => cell
                .coerce_to(t)
                .ok_or_else(|| format!("cannot coerce `{}` to {t}", cell.render())),
            _ => Ok(cell.clone()),
        }
    }

    /// The first failing facet for one cell, if any.
    pub fn failure(&self, cell: &CellValue) -> Option<String> {
        if cell.is_null() {
            return (!self.params.nullable).then(|| "null value not allowed".to_string());
        }
        let v = match self.normalize(cell) {
            Ok(v) => v,
            Err(m) => return Some(m),
        };
        if let Some(t) = self.params.expected_type {
            if !v.conforms_to(t) {
                let found = v.value_type().map(|t| t.to_string()).unwrap_or_default();
                return Some(format!("expected {t}, found {found}"));
            }
        }
        if let Some(b) = self.ge {
            if !ge_bound(&v, b) {
                return Some(format!("value below minimum {b} (ge)"));
            }
        }
        if let Some(b) = self.gt {
            if !matches!(v.compare(&CellValue::Real(b)), Some(o) if o.is_gt()) {
                return Some(format!("value not greater than {b} (gt)"));
            }
        }
        if let Some(b) = self.le {
            if !matches!(v.compare(&CellValue::Real(b)), Some(o) if o.is_le()) {
                return Some(format!("value above maximum {b} (le)"));
            }
        }
        if let Some(b) = self.lt {
            if !matches!(v.compare(&CellValue::Real(b)), Some(o) if o.is_lt()) {
                return Some(format!("value not less than {b} (lt)"));
            }
        }
        if let Some(members) = &self.isin {
            let text = v.render();
            if !members.iter().any(|(raw, typed)| *raw == text || typed.loosely_equals(&v)) {
                return Some("value not in allowed set".to_string());
            }
        }
        if let Some(r) = self.reference {
            if !r.contains(v.render().trim()) {
                return Some(format!("value not found in reference `{}`", r.name));
            }
        }
        if let Some(re) = &self.regex {
            if !re.is_match(&v.render()) {
                return Some("value does not match pattern".to_string());
            }
        }
        None
    }
}

/// Key under which uniqueness compares values (1 and 1.0 collide).
#[derive(PartialEq, Eq, Hash)]
pub(crate) enum UniqueKey {
    Int(i64),
    Real(u64),
    Text(String),
}

pub(crate) fn unique_key(v: &CellValue) -> UniqueKey {
    match v {
        CellValue::Integer(i) => UniqueKey::Int(*i),
        CellValue::Real(r) if r.fract() == 0.0 && r.abs() < 9.0e18 => UniqueKey::Int(*r as i64),
        CellValue::Real(r) => UniqueKey::Real((r + 0.0).to_bits()),
        other => UniqueKey::Text(other.render()),
    }
}

fn check_column_at(ds: &TabularDataset, col: usize, check: &CellCheck<'_>) -> Vec<Finding> {
    let name = &ds.column_names()[col];
    let mut out = Vec::new();
    let mut seen: HashSet<UniqueKey> = HashSet::new();
    for (r, row) in ds.rows().iter().enumerate() {
        let cell = &row[col];
        if let Some(msg) = check.failure(cell) {
            out.push(Finding::new(Locus::cell(r, name.clone()), Some(cell.render()), msg));
            continue;
        }
        if check.params.unique && !cell.is_null() {
            let v = check.normalize(cell).unwrap_or_else(|_| cell.clone());
            if !seen.insert(unique_key(&v)) {
                out.push(Finding::new(Locus::cell(r, name.clone()), Some(cell.render()), "duplicate value"));
            }
        }
    }
    out
}

/// One finding per offending cell of `p.column`.
pub fn check_column(ds: &TabularDataset, p: &ColumnParams, ctx: &EvaluationContext) -> Result<Vec<Finding>, EvalError> {
    let column = p.column.as_deref().ok_or_else(|| EvalError::InvalidParams("`column` is required".into()))?;
    let check = CellCheck::new(p, ctx)?;
    Ok(match ds.column_index(column) {
        Some(col) => check_column_at(ds, col, &check),
        None => vec![absent(column)],
    })
}

/// Findings exactly at rows where `when` holds and `then` fails.
pub fn check_conditional(
    ds: &TabularDataset,
    p: &ConditionalParams,
    ctx: &EvaluationContext,
) -> Result<Vec<Finding>, EvalError> {
    let filter = match RowFilter::new(ds, Some(&p.when)) {
        Ok(f) => f,
        Err(missing) => return Ok(missing),
    };
    let mut needed: Vec<&str> = p.on_columns.iter().map(String::as_str).collect();
    let then_column = match &p.then {
        Then::Predicate(pred) => pred.column.as_str(),
        Then::Check(c) => c.column.as_deref().unwrap_or_default(),
    };
    needed.push(then_column);
    let idx = match resolve_columns(ds, needed) {
        Ok(i) => i,
        Err(missing) => return Ok(missing),
    };
    let col = *idx.last().expect("then column");
    let check = match &p.then {
        Then::Check(c) => Some(CellCheck::new(c, ctx)?),
        Then::Predicate(_) => None,
    };
    let describe = describe_when(&p.when);
    let mut out = Vec::new();
    for (r, row) in ds.rows().iter().enumerate() {
        if !filter.holds(row) {
            continue;
        }
        let cell = &row[col];
        let failure = match (&p.then, &check) {
            (Then::Predicate(pred), _) => (!pred.eval(cell)).then(|| format!("`{}` fails {:?}", pred.column, pred.op)),
            (Then::Check(_), Some(c)) => c.failure(cell),
            _ => None,
        };
        if let Some(msg) = failure {
            out.push(Finding::new(
                Locus::cell(r, then_column),
                Some(cell.render()),
                format!("when {describe}: {msg}"),
            ));
        }
    }
    Ok(out)
}

pub(crate) fn describe_when(when: &When) -> String {
    when.predicates()
        .iter()
        .map(|p| {
            let operand = match (&p.value, &p.values) {
                (Some(v), _) => format!(" {}", v.0),
                (None, Some(vs)) => format!(
                    " [{}]",
                    vs.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(", ")
                ),
                _ => String::new(),
            };
            format!("{} {:?}{operand}", p.column, p.op).to_lowercase()
        })
        .collect::<Vec<_>>()
        .join(" and ")
}

/// Per value: `min <= v <= max` and `(v - min) % step == 0`. With
/// `require_contiguous`, every step in range must appear exactly once.
pub fn check_stepwise(ds: &TabularDataset, p: &StepwiseParams, ctx: &EvaluationContext) -> Result<Vec<Finding>, EvalError> {
    let min = p.min.resolve_number(ctx)?;
    let max = p.max.resolve_number(ctx)?;
    if min > max {
        return Err(EvalError::InvalidParams(format!("stepwise min {min} exceeds max {max}")));
    }
    let Some(col) = ds.column_index(&p.column) else {
        return Ok(vec![absent(&p.column)]);
    };
    let mut out = Vec::new();
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for (r, row) in ds.rows().iter().enumerate() {
        let cell = &row[col];
        let Some(v) = cell.as_f64() else {
            let msg = if cell.is_null() { "missing value" } else { "value is not numeric" };
            out.push(Finding::new(Locus::cell(r, p.column.clone()), Some(cell.render()), msg));
            continue;
        };
        if !(min <= v && v <= max) {
            out.push(Finding::new(
                Locus::cell(r, p.column.clone()),
                Some(cell.render()),
                format!("value outside [{min}, {max}]"),
            ));
        } else if (v - min) % p.step != 0.0 {
            out.push(Finding::new(
                Locus::cell(r, p.column.clone()),
                Some(cell.render()),
                format!("value is not an increment of {} from {min}", p.step),
            ));
        } else {
            *counts.entry(((v - min) / p.step).round() as u64).or_default() += 1;
        }
    }
    if p.require_contiguous {
        let steps = ((max - min) / p.step).floor();
        if steps > 10_000_000.0 {
            return Err(EvalError::InvalidParams("stepwise range too large for contiguity".into()));
        }
        for k in 0..=steps as u64 {
            let day = CellValue::Real(min + k as f64 * p.step);
            let day = day.coerce_to(ValueType::Integer).unwrap_or(day).render();
            match counts.get(&k).copied().unwrap_or(0) {
                1 => {}
                0 => out.push(Finding::new(
                    Locus::column(p.column.clone()),
                    Some(day.clone()),
                    format!("step {day} missing"),
                )),
                n => out.push(Finding::new(
                    Locus::column(p.column.clone()),
                    Some(day.clone()),
                    format!("step {day} appears {n} times"),
                )),
            }
        }
    }
    Ok(out)
}

/// Applies the template to every selected column.
pub fn check_dynamic_columns(
    ds: &TabularDataset,
    p: &DynamicColumnsParams,
    ctx: &EvaluationContext,
) -> Result<Vec<Finding>, EvalError> {
    let selected = p.selector.select(ds.column_names());
    if selected.is_empty() {
        return Err(EvalError::SelectorEmpty);
    }
    let check = CellCheck::new(&p.template, ctx)?;
    let mut out = Vec::new();
    for name in selected {
        let col = ds.column_index(name).expect("selected column exists");
        out.extend(check_column_at(ds, col, &check));
    }
    Ok(out)
}

/// Whether `sum` lies within `tolerance` of `target`. A relative slack of
/// 1e-9 absorbs the rounding of decimal inputs at the band edges.
pub fn within_tolerance(sum: f64, target: f64, tolerance: f64) -> bool {
    (sum - target).abs() <= tolerance + 1e-9 * target.abs().max(1.0)
}

pub fn check_summation(ds: &TabularDataset, p: &SummationParams, ctx: &EvaluationContext) -> Result<Vec<Finding>, EvalError> {
    let target = p.target.resolve_number(ctx)?;
    let selected = p.columns.select(ds.column_names());
    if selected.is_empty() {
        return Err(EvalError::SelectorEmpty);
    }
    let cols: Vec<usize> = selected.iter().map(|n| ds.column_index(n).expect("selected")).collect();
    let mut out = Vec::new();
    let mut bad_rows = HashSet::new();
    let mut bad_cols = HashSet::new();
    for (r, row) in ds.rows().iter().enumerate() {
        for &c in &cols {
            if !row[c].is_numeric() {
                out.push(Finding::new(
                    Locus::cell(r, ds.column_names()[c].clone()),
                    Some(row[c].render()),
                    "non-numeric value in summed column",
                ));
                bad_rows.insert(r);
                bad_cols.insert(c);
            }
        }
    }
    let fmt_sum = |s: f64| format!("{s}");
    match p.axis {
        SumAxis::PerRow => {
            for (r, row) in ds.rows().iter().enumerate() {
                if bad_rows.contains(&r) {
                    continue;
                }
                let sum: f64 = cols.iter().map(|&c| row[c].as_f64().expect("numeric")).sum();
                if !within_tolerance(sum, target, p.tolerance) {
                    out.push(Finding::new(
                        Locus::Row { row: r },
                        Some(fmt_sum(sum)),
                        format!("row sum {sum} not within {} of {target}", p.tolerance),
                    ));
                }
            }
        }
        SumAxis::PerColumn => {
            for &c in &cols {
                if bad_cols.contains(&c) {
                    continue;
                }
                let sum: f64 = ds.column(c).map(|v| v.as_f64().expect("numeric")).sum();
                if !within_tolerance(sum, target, p.tolerance) {
                    let name = &ds.column_names()[c];
                    out.push(Finding::new(
                        Locus::column(name.clone()),
                        Some(fmt_sum(sum)),
                        format!("{name},{sum}"),
                    ));
                }
            }
        }
    }
    Ok(out)
}

pub fn check_row_pairs(ds: &TabularDataset, p: &RowPairParams) -> Vec<Finding> {
    let names: Vec<&str> = match p {
        RowPairParams::DistinctFields(c) | RowPairParams::OrderedFields(c) => c.iter().map(String::as_str).collect(),
        RowPairParams::UniqueRows { columns, .. } => columns.iter().map(String::as_str).collect(),
    };
    let idx = match resolve_columns(ds, names.iter().copied()) {
        Ok(i) => i,
        Err(missing) => return missing,
    };
    let mut out = Vec::new();
    match p {
        RowPairParams::DistinctFields(_) => {
            for (r, row) in ds.rows().iter().enumerate() {
                if row[idx[0]].loosely_equals(&row[idx[1]]) {
                    out.push(Finding::new(
                        Locus::Row { row: r },
                        Some(row[idx[0]].render()),
                        format!("`{}` equals `{}`", names[0], names[1]),
                    ));
                }
            }
        }
        RowPairParams::OrderedFields(_) => {
            for (r, row) in ds.rows().iter().enumerate() {
                let (a, b) = (&row[idx[0]], &row[idx[1]]);
                if a.is_null() || b.is_null() {
                    continue;
                }
                if !matches!(a.compare(b), Some(o) if o.is_lt()) {
                    out.push(Finding::new(
                        Locus::Row { row: r },
                        Some(format!("{}, {}", a.render(), b.render())),
                        format!("`{}` is not before `{}`", names[0], names[1]),
                    ));
                }
            }
        }
        RowPairParams::UniqueRows { unordered, .. } => {
            let mut first_seen: HashMap<Vec<String>, usize> = HashMap::new();
            for (r, row) in ds.rows().iter().enumerate() {
                let mut key: Vec<String> = idx.iter().map(|&i| row[i].to_string()).collect();
                if *unordered {
                    key.sort();
                }
                match first_seen.get(&key) {
                    Some(first) => out.push(Finding::new(
                        Locus::Row { row: r },
                        Some(key.join(", ")),
                        format!("duplicate of row {first}"),
                    )),
                    None => {
                        first_seen.insert(key, r);
                    }
                }
            }
        }
    }
    out
}

/// Every later row (where `when` holds) must carry the first such row's
/// value in `p.column`.
pub fn check_first_value_applies(ds: &TabularDataset, p: &FirstValueParams) -> Vec<Finding> {
    let filter = match RowFilter::new(ds, p.when.as_ref()) {
        Ok(f) => f,
        Err(missing) => return missing,
    };
    let Some(col) = ds.column_index(&p.column) else {
        return vec![absent(&p.column)];
    };
    let mut first: Option<&CellValue> = None;
    let mut out = Vec::new();
    for (r, row) in ds.rows().iter().enumerate() {
        if !filter.holds(row) {
            continue;
        }
        let v = &row[col];
        match first {
            None => first = Some(v),
            Some(f) => {
                let same = (f.is_null() && v.is_null()) || f.loosely_equals(v);
                if !same {
                    out.push(Finding::new(
                        Locus::cell(r, p.column.clone()),
                        Some(v.render()),
                        format!("expected `{}` (first value)", f.render()),
                    ));
                }
            }
        }
    }
    out
}

pub fn check_columns_present(ds: &TabularDataset, p: &ColumnsPresentParams) -> Vec<Finding> {
    let mut out = Vec::new();
    for name in &p.columns {
        match ds.column_index(name) {
            None => out.push(absent(name)),
            Some(c) if p.non_null => {
                for (r, row) in ds.rows().iter().enumerate() {
                    if row[c].is_null() {
                        out.push(Finding::new(Locus::cell(r, name.clone()), None, "required value missing"));
                    }
                }
            }
            Some(_) => {}
        }
    }
    out
}

pub fn check_row_count(ds: &TabularDataset, p: &CountParams) -> Vec<Finding> {
    let n = ds.row_count() as u64;
    let low = p.min.is_some_and(|m| n < m);
    let high = p.max.is_some_and(|m| n > m);
    if low || high {
        let range = format!(
            "[{}, {}]",
            p.min.map(|m| m.to_string()).unwrap_or_else(|| "0".into()),
            p.max.map(|m| m.to_string()).unwrap_or_else(|| "inf".into())
        );
        vec![Finding::new(Locus::File, Some(n.to_string()), format!("row count {n} outside {range}"))]
    } else {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_tabular;
    use crate::model::LoadOptions;
    use crate::spec::{ColumnSelector, ParamValue, PredicateOp, Scalar};

    fn table(csv: &str) -> TabularDataset {
        parse_tabular("t.csv", csv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn ctx() -> EvaluationContext {
        EvaluationContext::default()
    }

    fn col(name: &str) -> ColumnParams {
        ColumnParams::for_column(name)
    }

    #[test]
    fn location_type_enum() {
        let ds = table("name,location_type\nA,town\nB,beach\nC,camp\n");
        let p = ColumnParams {
            isin: Some(vec!["conflict_zone".into(), "town".into(), "camp".into()]),
            ..col("location_type")
        };
        let f = check_column(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(1, "location_type"));
        assert_eq!(f[0].offending.as_deref(), Some("beach"));
    }

    #[test]
    fn population_bounds_and_nulls() {
        let ds = table("name,population\nA,-3\nB,\nC,10.5\n");
        let p = ColumnParams {
            expected_type: Some(ValueType::Real),
            ge: Some(ParamValue::Number(0.0)),
            nullable: true,
            coerce: true,
            ..col("population")
        };
        let f = check_column(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "population"));
        let strict = ColumnParams { nullable: false, ..p };
        assert_eq!(check_column(&ds, &strict, &ctx()).unwrap().len(), 2);
    }

    #[test]
    fn lat_lon_ranges() {
        let ds = table("lat,lon\n95,95\n");
        let range = |c: &str, lo: f64, hi: f64| ColumnParams {
            expected_type: Some(ValueType::Real),
            ge: Some(ParamValue::Number(lo)),
            le: Some(ParamValue::Number(hi)),
            ..col(c)
        };
        assert_eq!(check_column(&ds, &range("lat", -90.0, 90.0), &ctx()).unwrap().len(), 1);
        assert!(check_column(&ds, &range("lon", -180.0, 180.0), &ctx()).unwrap().is_empty());
    }

    #[test]
    fn numeric_enum_members() {
        let ds = table("forced_redirection\n0\n1\n2\n3\n");
        let p = ColumnParams {
            isin: Some(vec!["0".into(), "1".into(), "2".into()]),
            ..col("forced_redirection")
        };
        let f = check_column(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].offending.as_deref(), Some("3"));
    }

    #[test]
    fn absent_column_is_one_finding() {
        let ds = table("a\n1\n");
        let f = check_column(&ds, &ColumnParams { unique: true, ..col("b") }, &ctx()).unwrap();
        assert_eq!(f, vec![absent("b")]);
    }

    #[test]
    fn unique_flags_later_occurrences() {
        let ds = table("id\n1\n2\n1\n1.0\n");
        let f = check_column(&ds, &ColumnParams { unique: true, ..col("id") }, &ctx()).unwrap();
        let rows: Vec<_> = f.iter().map(|x| x.locus.clone()).collect();
        assert_eq!(rows, vec![Locus::cell(2, "id"), Locus::cell(3, "id")]);
    }

    #[test]
    fn regex_is_full_match() {
        let ds = table("code\nAB12\nxAB12\n");
        let p = ColumnParams {
            regex: Some("[A-Z]{2}[0-9]{2}".into()),
            ..col("code")
        };
        let f = check_column(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(1, "code"));
    }

    fn conflict_rule(then: Then) -> ConditionalParams {
        ConditionalParams {
            when: When::One(Predicate {
                column: "location_type".into(),
                op: PredicateOp::Eq,
                value: Some(Scalar(CellValue::Text("conflict_zone".into()))),
                values: None,
            }),
            then,
            on_columns: vec![],
        }
    }

    #[test]
    fn conflict_zone_population() {
        let ds = table("name,location_type,population\nA,conflict_zone,0\nB,town,0\nC,conflict_zone,5\n");
        let p = conflict_rule(Then::Check(Box::new(ColumnParams {
            expected_type: Some(ValueType::Real),
            gt: Some(ParamValue::Number(0.0)),
            ..col("population")
        })));
        let f = check_conditional(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "population"));
    }

    #[test]
    fn conflict_zone_needs_date() {
        let ds = table("name,location_type,conflict_date\nA,conflict_zone,\nB,town,\n");
        let p = conflict_rule(Then::Predicate(Predicate {
            column: "conflict_date".into(),
            op: PredicateOp::Notnull,
            value: None,
            values: None,
        }));
        let f = check_conditional(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "conflict_date"));
    }

    fn steps(min: f64, max: f64, contiguous: bool) -> StepwiseParams {
        StepwiseParams {
            column: "day".into(),
            min: ParamValue::Number(min),
            max: ParamValue::Number(max),
            step: 1.0,
            require_contiguous: contiguous,
        }
    }

    #[test]
    fn stepwise_cases() {
        assert!(check_stepwise(&table("day\n0\n1\n2\n3\n"), &steps(0.0, 3.0, false), &ctx()).unwrap().is_empty());
        assert_eq!(check_stepwise(&table("day\n2.5\n"), &steps(0.0, 3.0, false), &ctx()).unwrap().len(), 1);
        assert_eq!(check_stepwise(&table("day\n12\n"), &steps(0.0, 10.0, false), &ctx()).unwrap().len(), 1);
        assert!(check_stepwise(&table("day\n0\n2\n3\n"), &steps(0.0, 3.0, false), &ctx()).unwrap().is_empty());
        let f = check_stepwise(&table("day\n0\n2\n3\n3\n"), &steps(0.0, 3.0, true), &ctx()).unwrap();
        let offending: Vec<_> = f.iter().map(|x| x.offending.clone().unwrap()).collect();
        assert_eq!(offending, vec!["1", "3"]);
    }

    #[test]
    fn dynamic_columns_cases() {
        let ds = table("day,z1,z2,z3,z4,z5\n0,1,2,9,0,1\n");
        let p = DynamicColumnsParams {
            selector: ColumnSelector::AllButFirst,
            template: ColumnParams {
                expected_type: Some(ValueType::Real),
                ge: Some(ParamValue::Number(0.0)),
                le: Some(ParamValue::Number(5.0)),
                ..ColumnParams::default()
            },
        };
        let f = check_dynamic_columns(&ds, &p, &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "z3"));
        let one = table("day\n0\n");
        assert_eq!(check_dynamic_columns(&one, &p, &ctx()), Err(EvalError::SelectorEmpty));
    }

    fn sum(axis: SumAxis) -> SummationParams {
        SummationParams {
            axis,
            columns: ColumnSelector::AllButFirst,
            target: ParamValue::Number(1.0),
            tolerance: 0.01,
        }
    }

    #[test]
    fn summation_cases() {
        let ds = table("k,a,b\nx,0.2,0.5\ny,0.3,0.4\nz,0.5,0.0\n");
        let f = check_summation(&ds, &sum(SumAxis::PerColumn), &ctx()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].message, "b,0.9");
        let rows = table("k,a,b,c\nx,0.2,0.3,0.5\ny,0.5,0.5,0.0\n");
        assert!(check_summation(&rows, &sum(SumAxis::PerRow), &ctx()).unwrap().is_empty());
        assert!(within_tolerance(1.005, 1.0, 0.01));
        assert!(within_tolerance(0.99, 1.0, 0.01));
        assert!(within_tolerance(1.01, 1.0, 0.01));
        assert!(!within_tolerance(0.989, 1.0, 0.01));
        assert!(!within_tolerance(1.011, 1.0, 0.01));
    }

    #[test]
    fn row_pair_cases() {
        let routes = table("name1,name2\nX,X\nA,B\nB,A\n");
        let f = check_row_pairs(&routes, &RowPairParams::DistinctFields(vec!["name1".into(), "name2".into()]));
        assert_eq!(f.len(), 1);
        let f = check_row_pairs(
            &routes,
            &RowPairParams::UniqueRows {
                columns: vec!["name1".into(), "name2".into()],
                unordered: true,
            },
        );
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::Row { row: 2 });
        let closures = table("start,end\n10,5\n1,4\n");
        let f = check_row_pairs(&closures, &RowPairParams::OrderedFields(vec!["start".into(), "end".into()]));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::Row { row: 0 });
    }

    #[test]
    fn first_value_must_equal() {
        let ds = table("country,location_type\nMali,conflict_zone\nNiger,town\nNiger,conflict_zone\n");
        let p = FirstValueParams {
            column: "country".into(),
            when: Some(When::One(Predicate {
                column: "location_type".into(),
                op: PredicateOp::Eq,
                value: Some(Scalar(CellValue::Text("conflict_zone".into()))),
                values: None,
            })),
        };
        let f = check_first_value_applies(&ds, &p);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(2, "country"));
    }

    #[test]
    fn presence_and_count() {
        let ds = table("a,b\n1,\n");
        let f = check_columns_present(
            &ds,
            &ColumnsPresentParams {
                columns: vec!["b".into(), "c".into()],
                non_null: true,
            },
        );
        assert_eq!(f.len(), 2);
        assert_eq!(check_row_count(&ds, &CountParams { min: Some(2), max: None }).len(), 1);
        assert!(check_row_count(&ds, &CountParams { min: Some(1), max: Some(1) }).is_empty());
    }
}
