//! Prompt construction. The template is this tool's own; it is versioned by
//! the first line so responses can be traced to the prompt shape.

use std::fmt::Write as _;

use crate::model::LoadOptions;
use crate::spec::GuardSpec;

use super::parse::BLOCK_TAG;
use super::SuggestError;

pub const DEFAULT_SAMPLE_ROWS: usize = 50;

pub(crate) const TEMPLATE_HEADER: &str = "# simguard constraint suggestion (template v1)";
pub(crate) const FILE_HEADING: &str = "### file: ";
pub(crate) const TASK_PREFIX: &str = "TASK: ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    /// Propose constraints the sampled data satisfies.
    Infer,
    /// Implement a natural-language constraint description.
    Generate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Csv,
    Yaml,
    Json,
}

impl SampleFormat {
    fn fence_tag(self) -> &'static str {
        match self {
            SampleFormat::Csv => "csv",
            SampleFormat::Yaml => "yaml",
            SampleFormat::Json => "json",
        }
    }

    fn unit(self) -> &'static str {
        match self {
            SampleFormat::Csv => "rows",
            _ => "lines",
        }
    }
}

/// An input file as shown to the model: a header line (tables only) and
/// its data rows or text lines, truncated when the prompt is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSample {
    pub name: String,
    pub format: SampleFormat,
    pub header: Option<String>,
    pub rows: Vec<String>,
}

impl FileSample {
    pub fn from_bytes(name: &str, bytes: &[u8]) -> Result<Self, SuggestError> {
        let lower = name.to_ascii_lowercase();
        let err = |reason: String| SuggestError::Sample {
            name: name.to_string(),
            reason,
        };
        if lower.ends_with(".yml") || lower.ends_with(".yaml") || lower.ends_with(".json") {
            let text = std::str::from_utf8(bytes).map_err(|e| err(e.to_string()))?;
            let format = if lower.ends_with(".json") {
                SampleFormat::Json
            } else {
                SampleFormat::Yaml
            };
            return Ok(Self {
                name: name.to_string(),
                format,
                header: None,
                rows: text.lines().map(str::to_string).collect(),
            });
        }
        let delimiter = LoadOptions::for_path(name).delimiter;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(delimiter)
            .from_reader(bytes);
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| err(e.to_string()))?;
            let mut w = csv::WriterBuilder::new()
                .delimiter(delimiter)
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&record).map_err(|e| err(e.to_string()))?;
            let bytes = w.into_inner().map_err(|e| err(e.to_string()))?;
            let line = String::from_utf8(bytes).map_err(|e| err(e.to_string()))?;
            lines.push(line.trim_end_matches('\n').to_string());
        }
        if lines.is_empty() {
            return Err(err("no header line".into()));
        }
        let header = lines.remove(0);
        Ok(Self {
            name: name.to_string(),
            format: SampleFormat::Csv,
            header: Some(header),
            rows: lines,
        })
    }

    fn render(&self, max_rows: usize, out: &mut String) {
        let shown = self.rows.len().min(max_rows);
        let _ = writeln!(
            out,
            "{FILE_HEADING}{} ({shown} of {} {})",
            self.name,
            self.rows.len(),
            self.format.unit()
        );
        let body: Vec<&str> = self
            .header
            .iter()
            .map(String::as_str)
            .chain(self.rows[..shown].iter().map(String::as_str))
            .collect();
        let fence = fence_for(&body.join("\n"));
        let _ = writeln!(out, "{fence}{}", self.format.fence_tag());
        for line in body {
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "{fence}");
    }
}

/// A backtick fence longer than any backtick run in `content`.
pub(crate) fn fence_for(content: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in content.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    "`".repeat((longest + 1).max(3))
}

#[derive(Debug, Clone)]
pub struct SuggestionRequest {
    pub file_samples: Vec<FileSample>,
    /// Free-text description of the simulation and its inputs.
    pub context_docs: Vec<String>,
    pub existing_spec: Option<GuardSpec>,
    pub task: Task,
    /// Data rows shown per file before any shrinking.
    pub sample_rows: usize,
    /// The provider's prompt size limit in bytes.
    pub max_prompt_bytes: Option<usize>,
}

impl SuggestionRequest {
    pub fn new(task: Task) -> Self {
        Self {
            file_samples: Vec::new(),
            context_docs: Vec::new(),
            existing_spec: None,
            task,
            sample_rows: DEFAULT_SAMPLE_ROWS,
            max_prompt_bytes: None,
        }
    }

    pub fn validate(&self) -> Result<(), SuggestError> {
        let described = matches!(&self.task, Task::Generate(d) if !d.trim().is_empty());
        if self.file_samples.is_empty() && !described {
            return Err(SuggestError::EmptyRequest);
        }
        Ok(())
    }
}

const GRAMMAR: &str = "\
Each constraint has: id (unique text), kind, on (logical file name), params,
optional severity (error | warning) and optional pattern (e.g. 1.A.i).
Kinds and their params:
- column: column, expected_type (integer | real | boolean | text), nullable,
  unique, ge, gt, le, lt, isin (list), in_reference, regex, coerce
- conditional: when (predicate or list of predicates), then (predicate or
  column params), on_columns. Predicate: column, op (eq | neq | in | notin |
  isnull | notnull), value or values
- stepwise: column, min, max, step, require_contiguous
- dynamic_columns: selector (all_but_first | all | {regex} | {columns}),
  template (column params without column)
- summation: axis (per_row | per_column), columns (selector), target, tolerance
- row_pairs: distinct_fields | ordered_fields (two columns) | unique_rows
- columns_present: columns, non_null
- row_count / file_count: min, max
- first_value_applies: column, when
- foreign_key: columns, other_file, other_columns, when
- connectivity: node_column, edge_file, endpoint_columns
- config_gate: gate {path, op (eq | neq | exists | not_exists), value}, constraint
- temporal_window: column, not_before
- document_nesting / document_schema: schema (inline schema), at
- syntax: no params
A number parameter may instead be {config: binding} or {reference: table, key: k}.
";

fn render(req: &SuggestionRequest, rows: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TEMPLATE_HEADER}\n");
    out.push_str("You help verify simulation input files before a run by writing\n");
    out.push_str("declarative constraints over them.\n\n");
    if !req.context_docs.is_empty() {
        out.push_str("## Context\n");
        for doc in &req.context_docs {
            let _ = writeln!(out, "{}\n", doc.trim_end());
        }
    }
    if !req.file_samples.is_empty() {
        out.push_str("## Input files\n");
        for s in &req.file_samples {
            s.render(rows, &mut out);
            out.push('\n');
        }
    }
    out.push_str("## Constraint language\n");
    out.push_str(GRAMMAR);
    out.push('\n');
    if let Some(spec) = &req.existing_spec {
        let yaml = spec.to_yaml();
        let fence = fence_for(&yaml);
        let _ = writeln!(out, "## Existing spec\n{fence}yaml\n{}{fence}\n", yaml);
    }
    out.push_str("## Task\n");
    match &req.task {
        Task::Infer => {
            let _ = writeln!(out, "{TASK_PREFIX}infer");
            out.push_str("Propose constraints that every row of the files above satisfies,\n");
            out.push_str("including relationships between columns and between files.\n");
        }
        Task::Generate(description) => {
            let _ = writeln!(out, "{TASK_PREFIX}generate");
            out.push_str("Write constraints implementing this description:\n");
            let fence = fence_for(description);
            let _ = writeln!(out, "{fence}text\n{}\n{fence}", description.trim_end());
        }
    }
    out.push_str("\n## Output format\n");
    let _ = writeln!(
        out,
        "Answer with one fenced block per constraint tagged `{BLOCK_TAG}`, each\n\
         holding one mapping with keys id, kind, on, params and optionally\n\
         severity and pattern. `on` is the file name without its extension.\n\
         Text outside the blocks is ignored."
    );
    out
}

/// Renders the prompt, halving the rows shown per file until it fits the
/// size limit.
pub fn build_prompt(req: &SuggestionRequest) -> Result<String, SuggestError> {
    req.validate()?;
    let mut rows = req.sample_rows;
    loop {
        let prompt = render(req, rows);
        match req.max_prompt_bytes {
            Some(limit) if prompt.len() > limit => {
                if rows == 0 {
                    return Err(SuggestError::SampleTooLarge {
                        size: prompt.len(),
                        limit,
                    });
                }
                rows /= 2;
            }
            _ => return Ok(prompt),
        }
    }
}
