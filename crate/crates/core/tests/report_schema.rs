use std::path::Path;

use simguard_core::{
    check_document, parse_document, validate, CheckMode, GuardSpec, InputSet, NodeSchema, RunOptions,
};

const SCHEMA: &str = include_str!("../schemas/report.schema.json");

fn schema() -> NodeSchema {
    serde_json::from_str(SCHEMA).unwrap()
}

fn report_json() -> String {
    let spec = GuardSpec::parse(
        "s.yml",
        r#"
name: schema-check
files:
  locations: locations.csv
  routes: routes.csv
  settings: settings.yml
constraints:
  - {id: pop, kind: column, on: locations, params: {column: population, expected_type: real, ge: 0}}
  - {id: iso, kind: connectivity, on: locations, params: {node_column: name, edge_file: routes, endpoint_columns: [name1, name2]}}
  - {id: rows, kind: row_count, on: routes, params: {min: 5}}
  - {id: doc, kind: document_schema, on: settings, params: {schema: {type: object, properties: {steps: {type: integer}}, additionalProperties: false}}}
  - {id: many, kind: file_count, on: "*.csv", params: {max: 1}}
"#,
        Path::new("."),
    )
    .unwrap();
    let mut inputs = InputSet::default();
    inputs.insert("locations.csv", "name,population\nA,10\nB,-1\nC,\n");
    inputs.insert("routes.csv", "name1,name2\nA,B\n");
    inputs.insert("settings.yml", "steps: 3\nextra: true\n");
    let opts = RunOptions {
        generated_at: "2026-01-01T00:00:00Z".into(),
        ..Default::default()
    };
    let report = validate(&spec, &inputs, &opts).unwrap();
    assert!(report.totals.failed >= 2);
    report.to_json()
}

#[test]
fn schema_is_well_formed() {
    schema().validate().unwrap();
}

#[test]
fn report_conforms_to_its_schema() {
    let doc = parse_document("report.json", &report_json()).unwrap();
    let findings = check_document(&doc, &schema(), CheckMode::Full, None);
    assert!(findings.is_empty(), "{findings:?}");
}

#[test]
fn schema_rejects_a_damaged_report() {
    let mut value: serde_json::Value = serde_json::from_str(&report_json()).unwrap();
    value.as_object_mut().unwrap().remove("totals");
    value["files"][0]["violations"][0]["severity"] = "fatal".into();
    let doc = parse_document("report.json", &value.to_string()).unwrap();
    let findings = check_document(&doc, &schema(), CheckMode::Full, None);
    assert_eq!(findings.len(), 2, "{findings:?}");
}
