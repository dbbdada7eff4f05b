use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::LoadError;
use crate::model::cell::CellValue;

/// Options for reading delimited text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub header_row: bool,
    pub type_coercion: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header_row: true,
            type_coercion: true,
        }
    }
}

impl LoadOptions {
    /// Picks the delimiter from a file extension (`.tsv` is tab separated).
    pub fn for_path(path: &str) -> Self {
        let mut opts = Self::default();
        if path.to_ascii_lowercase().ends_with(".tsv") {
            opts.delimiter = b'\t';
        }
        opts
    }
}

/// An ordered, named-column table of typed cells.
///
/// Row indices are 0-based data rows; the header is not counted.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    source_path: String,
    column_names: Vec<String>,
    rows: Vec<Vec<CellValue>>,
}

impl TabularDataset {
    /// Builds a dataset, enforcing the width and unique-name invariants.
    pub fn new(
        source_path: impl Into<String>,
        column_names: Vec<String>,
        rows: Vec<Vec<CellValue>>,
    ) -> Result<Self, LoadError> {
        let source_path = source_path.into();
        let column_names: Vec<String> = column_names.into_iter().map(|c| c.trim().to_string()).collect();
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(LoadError::Parse {
                    path: source_path,
                    line: 1,
                    reason: format!("duplicate column name `{name}`"),
                });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != column_names.len() {
                return Err(LoadError::Parse {
                    path: source_path,
                    line: i as u64 + 2,
                    reason: format!("expected {} fields, found {}", column_names.len(), row.len()),
                });
            }
        }
        Ok(Self {
            source_path,
            column_names,
            rows,
        })
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn cell(&self, row: usize, column: usize) -> &CellValue {
        &self.rows[row][column]
    }

    /// Iterates one column top to bottom.
    pub fn column(&self, index: usize) -> impl Iterator<Item = &CellValue> + '_ {
        self.rows.iter().map(move |r| &r[index])
    }

    /// Replaces one cell. Panics when the coordinates are out of range.
    pub fn set_cell(&mut self, row: usize, column: usize, value: CellValue) {
        self.rows[row][column] = value;
    }

    /// Writes the dataset back as delimited text with a header row.
    pub fn to_delimited(&self, delimiter: u8) -> String {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.column_names).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(CellValue::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Reads a delimited file from disk.
pub fn load_tabular(path: &Path, options: &LoadOptions) -> Result<TabularDataset, LoadError> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LoadError::FileMissing { path: display.clone() },
        _ => LoadError::Io {
            path: display.clone(),
            source: e,
        },
    })?;
    parse_tabular(&display, &bytes, options)
}

/// Parses delimited bytes (RFC 4180 quoting) into a typed dataset.
pub fn parse_tabular(
    source_path: &str,
    bytes: &[u8],
    options: &LoadOptions,
) -> Result<TabularDataset, LoadError> {
    let parse_err = |line: u64, reason: String| LoadError::Parse {
        path: source_path.to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut records = reader.byte_records();
    let mut column_names: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    let mut width = None;

    if options.header_row {
        match records.next() {
            None => return Err(parse_err(1, "missing header row".into())),
            Some(rec) => {
                let rec = rec.map_err(|e| csv_error(source_path, e))?;
                for field in rec.iter() {
                    let text = std::str::from_utf8(field)
                        .map_err(|_| parse_err(1, "header is not valid UTF-8".into()))?;
                    column_names.push(normalize_header(text));
                }
                width = Some(column_names.len());
            }
        }
    }

    for rec in records {
        let rec = rec.map_err(|e| csv_error(source_path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(parse_err(
                line,
                format!("expected {expected} fields, found {}", rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            let text = std::str::from_utf8(field)
                .map_err(|_| parse_err(line, "field is not valid UTF-8".into()))?;
            let cell = if options.type_coercion {
                CellValue::infer(text)
                    .map_err(|t| parse_err(line, format!("non-finite numeric token `{}`", t.0)))?
            } else if text.is_empty() {
                CellValue::Null
            } else {
                CellValue::Text(text.to_string())
            };
            row.push(cell);
        }
        rows.push(row);
    }

    if !options.header_row {
        column_names = (0..width.unwrap_or(0)).map(|i| format!("column_{}", i + 1)).collect();
    }
    TabularDataset::new(source_path, column_names, rows)
}

/// Header cleanup: surrounding whitespace, a leading `#` marker and one
/// layer of quotes are removed (`#"name"` becomes `name`).
fn normalize_header(raw: &str) -> String {
    let mut name = raw.trim();
    if let Some(rest) = name.strip_prefix('#') {
        name = rest.trim();
    }
    if name.len() >= 2 && name.starts_with('"') && name.ends_with('"') {
        name = &name[1..name.len() - 1];
    }
    name.trim().to_string()
}

fn csv_error(path: &str, e: csv::Error) -> LoadError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    LoadError::Parse {
        path: path.to_string(),
        line,
        reason: e.to_string(),
    }
}
