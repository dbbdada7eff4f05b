//! Synthetic corpora: seeded tables plus a guard spec they satisfy, with the
//! constraint mix controlled by a 1–10 complexity level.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use simguard_core::{GuardSpec, InputSet};

use crate::BenchError;

/// Categories drawn for the `category` column.
pub const CATEGORIES: [&str; 5] = ["cat_a", "cat_b", "cat_c", "cat_d", "cat_e"];
/// Columns every generated table starts with.
pub const FIXED_COLUMNS: [&str; 6] = ["id", "category", "code", "p0", "p1", "p2"];
pub const X_MAX: f64 = 100.0;
pub const LEVEL_MAX: i64 = 10;
/// Denominator of the probability columns; keeps row sums exact.
const P_UNITS: u32 = 64;

pub const CONFIG_FILE: &str = "simsettings.yml";
pub const CATEGORY_FILE: &str = "categories.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusParams {
    pub complexity: u8,
    pub columns: usize,
    pub rows: usize,
    pub files: usize,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            complexity: 1,
            columns: 10,
            rows: 100,
            files: 1,
            seed: 0,
        }
    }
}

impl CorpusParams {
    pub fn validate(&self) -> Result<(), BenchError> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(BenchError::InvalidParams(what.to_string()))
            }
        };
        check((1..=10).contains(&self.complexity), "complexity must be in 1..=10")?;
        check((10..=100).contains(&self.columns), "columns must be in 10..=100")?;
        check((100..=1000).contains(&self.rows), "rows must be in 100..=1000")?;
        check((1..=100).contains(&self.files), "files must be in 1..=100")
    }
}

/// A generated file: a table kept as text cells so it can be mutated, or a
/// raw document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenFile {
    Table { header: Vec<String>, rows: Vec<Vec<String>> },
    Text(String),
}

impl GenFile {
    pub fn render(&self) -> String {
        match self {
            GenFile::Text(t) => t.clone(),
            GenFile::Table { header, rows } => {
                let mut out = header.join(",");
                out.push('\n');
                for r in rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                out
            }
        }
    }

    pub fn as_table(&self) -> Option<(&[String], &[Vec<String>])> {
        match self {
            GenFile::Table { header, rows } => Some((header, rows)),
            GenFile::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub params: CorpusParams,
    /// Relative path to contents, in path order.
    pub files: BTreeMap<String, GenFile>,
    pub spec: GuardSpec,
    pub spec_yaml: String,
}

impl Corpus {
    pub fn data_files(&self) -> impl Iterator<Item = (&String, &GenFile)> {
        self.files.iter().filter(|(p, _)| p.starts_with("data_"))
    }

    pub fn input_set(&self) -> InputSet {
        let mut set = InputSet::default();
        for (path, f) in &self.files {
            set.insert(path.clone(), f.render());
        }
        set
    }

    /// Every file plus `guard.yml`, written under `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (path, f) in &self.files {
            fs::write(dir.join(path), f.render())?;
        }
        fs::write(dir.join("guard.yml"), &self.spec_yaml)
    }

    pub fn total_rows(&self) -> usize {
        self.data_files()
            .filter_map(|(_, f)| f.as_table())
            .map(|(_, rows)| rows.len())
            .sum()
    }
}

/// Names of the variable columns after the fixed ones: alternately
/// `x_<i>` (real) and `level_<i>` (integer).
pub fn variable_columns(columns: usize) -> Vec<String> {
    (0..columns.saturating_sub(FIXED_COLUMNS.len()))
        .map(|i| if i % 2 == 0 { format!("x_{i}") } else { format!("level_{i}") })
        .collect()
}

pub fn data_file_name(index: usize) -> String {
    format!("data_{index:03}.csv")
}

fn table(p: &CorpusParams, index: usize, rng: &mut ChaCha8Rng) -> GenFile {
    let vars = variable_columns(p.columns);
    let header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).chain(vars.iter().cloned()).collect();
    let rows = (0..p.rows)
        .map(|r| {
            let mut row = Vec::with_capacity(header.len());
            row.push((index * 1_000_000 + r).to_string());
            row.push(CATEGORIES[rng.random_range(0..CATEGORIES.len())].to_string());
            let letters: String = (0..2).map(|_| rng.random_range(b'A'..=b'Z') as char).collect();
            row.push(format!("{letters}-{:03}", rng.random_range(0..1000)));
            let a = rng.random_range(0..=P_UNITS);
            let b = rng.random_range(0..=P_UNITS - a);
            for k in [a, b, P_UNITS - a - b] {
                row.push(format!("{}", k as f64 / P_UNITS as f64));
            }
            for v in &vars {
                if v.starts_with("x_") {
                    row.push(format!("{:.2}", rng.random_range(0.0..X_MAX)));
                } else {
                    row.push(rng.random_range(0..=LEVEL_MAX).to_string());
                }
            }
            row
        })
        .collect();
    GenFile::Table { header, rows }
}

/// Constraint ids a corpus of the given complexity declares, by purpose.
pub mod ids {
    pub const ID: &str = "data.id";
    pub const CATEGORY: &str = "data.category";
    pub const CATEGORY_FK: &str = "data.category_fk";
    pub const CODE: &str = "data.code";
    pub const CODE_WHEN: &str = "data.code_when_cat_a";
    pub const P_SUM: &str = "data.p_sum";
    pub const LEVELS: &str = "data.levels";

    pub fn column(name: &str) -> String {
        format!("data.{name}")
    }
}

/// The guard spec for a corpus, as YAML. Complexity adds, in order:
/// 1 types, 2 bounds, 3 enumerations, 4 uniqueness and non-null ids,
/// 5 code pattern, 6 a conditional rule, 7 per-row summation, 8 dynamic
/// level columns, 9 a config-gated level bound, 10 a foreign key into
/// `categories.csv` (replacing the category enumeration).
pub fn spec_yaml(p: &CorpusParams) -> String {
    let d = p.complexity;
    let mut out = String::new();
    let _ = writeln!(out, "name: synthetic-d{d}");
    out.push_str("files:\n  data: \"data_*.csv\"\n");
    if d >= 10 {
        let _ = writeln!(out, "  categories: {CATEGORY_FILE}");
    }
    if d >= 9 {
        let _ = writeln!(out, "config: {CONFIG_FILE}\nbindings:\n  max_level: move_rules/max_flood_level");
    }
    out.push_str("constraints:\n");
    let mut c = |line: String| {
        let _ = writeln!(out, "  - {line}");
    };
    let strict_id = if d >= 4 { ", unique: true" } else { ", nullable: true" };
    c(format!("{{id: {}, kind: column, on: data, params: {{column: id, expected_type: integer{strict_id}}}}}", ids::ID));
    if d >= 10 {
        c(format!(
            "{{id: {}, kind: foreign_key, on: data, params: {{columns: [category], other_file: categories, other_columns: [name]}}}}",
            ids::CATEGORY_FK
        ));
    } else {
        let members = if d >= 3 { format!(", isin: [{}]", CATEGORIES.join(", ")) } else { String::new() };
        c(format!(
            "{{id: {}, kind: column, on: data, params: {{column: category, expected_type: text, nullable: true{members}}}}}",
            ids::CATEGORY
        ));
    }
    let regex = if d >= 5 { ", regex: \"[A-Z]{2}-[0-9]{3}\"" } else { "" };
    c(format!(
        "{{id: {}, kind: column, on: data, params: {{column: code, expected_type: text, nullable: true{regex}}}}}",
        ids::CODE
    ));
    if d >= 6 {
        c(format!(
            "{{id: {}, kind: conditional, on: data, params: {{when: {{column: category, op: eq, value: cat_a}}, then: {{column: code, op: notnull}}}}}}",
            ids::CODE_WHEN
        ));
    }
    let bounds = |lo: &str, hi: &str| if d >= 2 { format!(", ge: {lo}, le: {hi}") } else { String::new() };
    for pc in ["p0", "p1", "p2"] {
        c(format!(
            "{{id: {}, kind: column, on: data, params: {{column: {pc}, expected_type: real, nullable: true{}}}}}",
            ids::column(pc),
            bounds("0", "1")
        ));
    }
    if d >= 7 {
        c(format!(
            "{{id: {}, kind: summation, on: data, params: {{axis: per_row, columns: {{regex: \"^p[0-9]+$\"}}, target: 1, tolerance: 0.01}}}}",
            ids::P_SUM
        ));
    }
    for v in variable_columns(p.columns) {
        if v.starts_with("x_") {
            c(format!(
                "{{id: {}, kind: column, on: data, params: {{column: {v}, expected_type: real, nullable: true{}}}}}",
                ids::column(&v),
                bounds("0", &X_MAX.to_string())
            ));
        } else if d < 8 {
            c(format!(
                "{{id: {}, kind: column, on: data, params: {{column: {v}, expected_type: integer, nullable: true{}}}}}",
                ids::column(&v),
                bounds("0", &LEVEL_MAX.to_string())
            ));
        }
    }
    if d == 8 {
        c(format!(
            "{{id: {}, kind: dynamic_columns, on: data, params: {{selector: {{regex: \"^level_\"}}, template: {{expected_type: integer, ge: 0, le: {LEVEL_MAX}}}}}}}",
            ids::LEVELS
        ));
    }
    if d >= 9 {
        c(format!(
            "{{id: {}, kind: config_gate, on: data, params: {{gate: {{path: move_rules/flood_rules, op: eq, value: true}}, constraint: {{kind: dynamic_columns, params: {{selector: {{regex: \"^level_\"}}, template: {{expected_type: integer, ge: 0, le: {{config: max_level}}}}}}}}}}}}",
            ids::LEVELS
        ));
    }
    out
}

/// Deterministic corpus for `p`: identical parameters give identical bytes.
pub fn generate_corpus(p: &CorpusParams) -> Result<Corpus, BenchError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut files = BTreeMap::new();
    for i in 0..p.files {
        files.insert(data_file_name(i), table(p, i, &mut rng));
    }
    if p.complexity >= 9 {
        files.insert(
            CONFIG_FILE.to_string(),
            GenFile::Text(format!("move_rules:\n  max_flood_level: {LEVEL_MAX}\n  flood_rules: true\n")),
        );
    }
    if p.complexity >= 10 {
        files.insert(
            CATEGORY_FILE.to_string(),
            GenFile::Table {
                header: vec!["name".into()],
                rows: CATEGORIES.iter().map(|c| vec![c.to_string()]).collect(),
            },
        );
    }
    let spec_yaml = spec_yaml(p);
    let spec = GuardSpec::parse("guard.yml", &spec_yaml, Path::new("."))
        .map_err(|e| BenchError::InvalidParams(format!("generated spec is invalid: {e}")))?;
    Ok(Corpus {
        params: *p,
        files,
        spec,
        spec_yaml,
    })
}
