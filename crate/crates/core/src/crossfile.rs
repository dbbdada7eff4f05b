//! Checks whose template draws on other input files or on the simulation
//! configuration: foreign keys, connectivity, config gates, and temporal
//! windows.

use std::collections::HashSet;

use crate::error::EvalError;
use crate::model::{CellValue, DocNode, EvaluationContext, Finding, Locus, TabularDataset};
use crate::spec::{
    ConfigGateParams, ConnectivityParams, ConstraintKind, ForeignKeyParams, Gate, GateOp, TemporalWindowParams,
};
use crate::tabular::{absent, resolve_columns, RowFilter};

fn domain_of(table: &TabularDataset, file: &str, columns: &[String]) -> Result<HashSet<String>, Vec<Finding>> {
    let mut idx = Vec::new();
    let mut missing = Vec::new();
    for c in columns {
        match table.column_index(c) {
            Some(i) => idx.push(i),
            None => missing.push(Finding::new(
                Locus::File,
                Some(c.clone()),
                format!("column `{c}` absent from `{file}`"),
            )),
        }
    }
    if !missing.is_empty() {
        return Err(missing);
    }
    Ok(table
        .rows()
        .iter()
        .flat_map(|row| idx.iter().map(move |&i| &row[i]))
        .filter(|v| !v.is_null())
        .map(|v| v.render().trim().to_string())
        .collect())
}

/// Every checked cell (on rows where `when` holds) must appear in the
/// union of `other_columns` of `other_file`. Matching is exact text
/// equality after trimming; nulls are not checked.
pub fn check_foreign_key(ds: &TabularDataset, p: &ForeignKeyParams, ctx: &EvaluationContext) -> Result<Vec<Finding>, EvalError> {
    let other = ctx.sibling_table(&p.other_file)?;
    let domain = match domain_of(other, &p.other_file, &p.other_columns) {
        Ok(d) => d,
        Err(f) => return Ok(f),
    };
    let filter = match RowFilter::new(ds, p.when.as_ref()) {
        Ok(f) => f,
        Err(f) => return Ok(f),
    };
    let cols = match resolve_columns(ds, p.columns.iter().map(String::as_str)) {
        Ok(c) => c,
        Err(f) => return Ok(f),
    };
    let target = format!("{}[{}]", p.other_file, p.other_columns.join("|"));
    let mut out = Vec::new();
    for (r, row) in ds.rows().iter().enumerate() {
        if !filter.holds(row) {
            continue;
        }
        for (&c, name) in cols.iter().zip(&p.columns) {
            let v = &row[c];
            if v.is_null() {
                continue;
            }
            if !domain.contains(v.render().trim()) {
                out.push(Finding::new(
                    Locus::cell(r, name.clone()),
                    Some(v.render()),
                    format!("value not found in {target}"),
                ));
            }
        }
    }
    Ok(out)
}

/// Flags node values (in the target file) that no edge endpoint names.
pub fn check_connectivity(ds: &TabularDataset, p: &ConnectivityParams, ctx: &EvaluationContext) -> Result<Vec<Finding>, EvalError> {
    let edges = ctx.sibling_table(&p.edge_file)?;
    let connected = match domain_of(edges, &p.edge_file, &p.endpoint_columns) {
        Ok(d) => d,
        Err(f) => return Ok(f),
    };
    let Some(col) = ds.column_index(&p.node_column) else {
        return Ok(vec![absent(&p.node_column)]);
    };
    let mut out = Vec::new();
    for (r, row) in ds.rows().iter().enumerate() {
        let v = &row[col];
        if !v.is_null() && !connected.contains(v.render().trim()) {
            out.push(Finding::new(
                Locus::cell(r, p.node_column.clone()),
                Some(v.render()),
                format!("isolated: not named in {}", p.edge_file),
            ));
        }
    }
    Ok(out)
}

/// Evaluates a gate predicate over the configuration document.
pub fn gate_holds(ctx: &EvaluationContext, gate: &Gate) -> Result<bool, EvalError> {
    let path = gate.doc_path();
    let node = ctx.config_path(&path)?;
    match gate.op {
        GateOp::Exists => Ok(node.is_some()),
        GateOp::NotExists => Ok(node.is_none()),
        GateOp::Eq | GateOp::Neq => {
            let node = node.ok_or_else(|| EvalError::ConfigBindingMissing {
                binding: gate.path.clone(),
                path: path.to_string(),
            })?;
            let expected = gate.value.as_ref().map(|v| &v.0).unwrap_or(&CellValue::Null);
            let equal = match node {
                DocNode::Scalar(v) => (v.is_null() && expected.is_null()) || v.loosely_equals(expected),
                _ => false,
            };
            Ok(equal == (gate.op == GateOp::Eq))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOutcome {
    /// The gate is false; the gated constraint was not evaluated.
    Skipped,
    Evaluated(Vec<Finding>),
}

/// Runs `evaluate` on the gated constraint only when the gate holds.
pub fn check_config_gate<F>(ctx: &EvaluationContext, p: &ConfigGateParams, evaluate: F) -> Result<GateOutcome, EvalError>
where
    F: FnOnce(&ConstraintKind) -> Result<Vec<Finding>, EvalError>,
{
    if gate_holds(ctx, &p.gate)? {
        evaluate(&p.constraint).map(GateOutcome::Evaluated)
    } else {
        Ok(GateOutcome::Skipped)
    }
}

/// Flags every value earlier than the resolved bound (inclusive bound).
pub fn check_temporal_window(
    ds: &TabularDataset,
    p: &TemporalWindowParams,
    ctx: &EvaluationContext,
) -> Result<Vec<Finding>, EvalError> {
    let bound = p.not_before.resolve(ctx)?;
    let Some(col) = ds.column_index(&p.column) else {
        return Ok(vec![absent(&p.column)]);
    };
    let mut out = Vec::new();
    for (r, row) in ds.rows().iter().enumerate() {
        let v = &row[col];
        if v.is_null() {
            continue;
        }
        let message = match v.compare(&bound) {
            Some(o) if o.is_lt() => format!("value before {}", bound.render()),
            Some(_) => continue,
            None => format!("value not comparable with {}", bound.render()),
        };
        out.push(Finding::new(Locus::cell(r, p.column.clone()), Some(v.render()), message));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{parse_document, parse_tabular, Artifact, LoadOptions};
    use crate::spec::{ColumnParams, ColumnsPresentParams, ParamValue, Predicate, PredicateOp, Scalar, When};

    fn table(name: &str, csv: &str) -> TabularDataset {
        parse_tabular(name, csv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn ctx_with(files: &[(&str, TabularDataset)]) -> EvaluationContext {
        let mut ctx = EvaluationContext::default();
        for (n, t) in files {
            ctx.sibling_files.insert(n.to_string(), Arc::new(Artifact::Table(t.clone())));
        }
        ctx
    }

    fn eq(column: &str, v: &str) -> When {
        When::One(Predicate {
            column: column.into(),
            op: PredicateOp::Eq,
            value: Some(Scalar(CellValue::Text(v.into()))),
            values: None,
        })
    }

    #[test]
    fn closure_country_typo() {
        let locations = table("locations.csv", "name,country,location_type\nA,Mali,town\nB,Niger,camp\nValidCamp,Mali,camp\n");
        let closures = table(
            "closures.csv",
            "closure_type,name1\ncountry,Mali-typo\ncountry,Niger\ncamp,ValidCamp\n",
        );
        let ctx = ctx_with(&[("locations", locations)]);
        let by_country = ForeignKeyParams {
            columns: vec!["name1".into()],
            other_file: "locations".into(),
            other_columns: vec!["country".into()],
            when: Some(eq("closure_type", "country")),
        };
        let f = check_foreign_key(&closures, &by_country, &ctx).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "name1"));
        let by_camp = ForeignKeyParams {
            other_columns: vec!["name".into()],
            when: Some(eq("closure_type", "camp")),
            ..by_country
        };
        assert!(check_foreign_key(&closures, &by_camp, &ctx).unwrap().is_empty());
    }

    #[test]
    fn location_in_either_route_column() {
        let routes = table("routes.csv", "name1,name2,distance\nA,B,10\n");
        let locations = table("locations.csv", "name\nA\nB\nC\n");
        let ctx = ctx_with(&[("routes", routes)]);
        let p = ForeignKeyParams {
            columns: vec!["name".into()],
            other_file: "routes".into(),
            other_columns: vec!["name1".into(), "name2".into()],
            when: None,
        };
        let f = check_foreign_key(&locations, &p, &ctx).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].offending.as_deref(), Some("C"));
    }

    #[test]
    fn missing_sibling_is_a_run_error() {
        let ds = table("c.csv", "name1\nx\n");
        let p = ForeignKeyParams {
            columns: vec!["name1".into()],
            other_file: "locations".into(),
            other_columns: vec!["name".into()],
            when: None,
        };
        assert_eq!(
            check_foreign_key(&ds, &p, &EvaluationContext::default()),
            Err(EvalError::SiblingFileMissing("locations".into()))
        );
    }

    fn iso() -> ConnectivityParams {
        ConnectivityParams {
            node_column: "name".into(),
            edge_file: "routes".into(),
            endpoint_columns: vec!["name1".into(), "name2".into()],
        }
    }

    #[test]
    fn connectivity_cases() {
        let nodes = table("l.csv", "name\nA\nB\nC\n");
        let ctx = ctx_with(&[("routes", table("r.csv", "name1,name2\nA,B\n"))]);
        let f = check_connectivity(&nodes, &iso(), &ctx).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].offending.as_deref(), Some("C"));
        let empty = ctx_with(&[("routes", table("r.csv", "name1,name2\n"))]);
        assert_eq!(check_connectivity(&nodes, &iso(), &empty).unwrap().len(), 3);
        let two = table("l.csv", "name\nA\nB\n");
        assert!(check_connectivity(&two, &iso(), &ctx).unwrap().is_empty());
    }

    fn flood_gate(op: GateOp, value: Option<bool>) -> ConfigGateParams {
        ConfigGateParams {
            gate: Gate {
                path: "flooding/enabled".into(),
                op,
                value: value.map(|b| Scalar(CellValue::Boolean(b))),
            },
            constraint: Box::new(ConstraintKind::ColumnsPresent(ColumnsPresentParams {
                columns: vec!["altitude".into(), "water_capacity".into()],
                non_null: false,
            })),
        }
    }

    #[test]
    fn gate_cases() {
        let ds = table("l.csv", "name\nA\n");
        let eval = |k: &ConstraintKind| match k {
            ConstraintKind::ColumnsPresent(p) => Ok(crate::tabular::check_columns_present(&ds, p)),
            _ => unreachable!(),
        };
        let mut ctx = EvaluationContext {
            config: Some(parse_document("s.yml", "flooding: {enabled: false}").unwrap()),
            ..Default::default()
        };
        assert_eq!(
            check_config_gate(&ctx, &flood_gate(GateOp::Eq, Some(true)), eval).unwrap(),
            GateOutcome::Skipped
        );
        ctx.config = Some(parse_document("s.yml", "flooding: {enabled: true}").unwrap());
        match check_config_gate(&ctx, &flood_gate(GateOp::Eq, Some(true)), eval).unwrap() {
            GateOutcome::Evaluated(f) => assert_eq!(f.len(), 2),
            GateOutcome::Skipped => panic!("gate should hold"),
        }
        ctx.config = Some(parse_document("s.yml", "other: 1").unwrap());
        assert_eq!(
            check_config_gate(&ctx, &flood_gate(GateOp::Exists, None), eval).unwrap(),
            GateOutcome::Skipped
        );
        assert!(matches!(
            check_config_gate(&ctx, &flood_gate(GateOp::Eq, Some(true)), eval),
            Err(EvalError::ConfigBindingMissing { .. })
        ));
    }

    #[test]
    fn temporal_window_cases() {
        let ctx = EvaluationContext {
            config: Some(parse_document("s.yml", "simulation: {start: 0}").unwrap()),
            config_bindings: [("start".to_string(), "simulation/start".parse().unwrap())].into(),
            ..Default::default()
        };
        let p = TemporalWindowParams {
            column: "day".into(),
            not_before: ParamValue::Config { config: "start".into() },
        };
        let f = check_temporal_window(&table("c.csv", "day\n-2\n0\n5\n"), &p, &ctx).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].locus, Locus::cell(0, "day"));
        let _ = ColumnParams::default();
    }
}
