use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser, Tag};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use crate::error::LoadError;
use crate::model::cell::CellValue;

/// A node of a hierarchical input: scalar, sequence, or ordered mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum DocNode {
    Scalar(CellValue),
    Sequence(Vec<DocNode>),
    /// Keys are unique; insertion order is preserved.
    Mapping(Vec<(String, DocNode)>),
}

impl DocNode {
    pub fn get(&self, key: &str) -> Option<&DocNode> {
        match self {
            DocNode::Mapping(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Follows a path of mapping keys and sequence indices.
    pub fn resolve(&self, path: &DocPath) -> Option<&DocNode> {
        let mut node = self;
        for seg in &path.0 {
            node = match node {
                DocNode::Mapping(_) => node.get(seg)?,
                DocNode::Sequence(items) => items.get(seg.parse::<usize>().ok()?)?,
                DocNode::Scalar(_) => return None,
            };
        }
        Some(node)
    }

    pub fn as_scalar(&self) -> Option<&CellValue> {
        match self {
            DocNode::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DocNode::Scalar(CellValue::Null) => "null",
            DocNode::Scalar(CellValue::Integer(_)) => "integer",
            DocNode::Scalar(CellValue::Real(_)) => "number",
            DocNode::Scalar(CellValue::Boolean(_)) => "boolean",
            DocNode::Scalar(CellValue::Text(_)) => "string",
            DocNode::Sequence(_) => "array",
            DocNode::Mapping(_) => "object",
        }
    }

    /// Converts to a JSON value (used to deserialize typed records).
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            DocNode::Scalar(CellValue::Null) => Value::Null,
            DocNode::Scalar(CellValue::Integer(i)) => Value::from(*i),
            DocNode::Scalar(CellValue::Real(r)) => Value::from(*r),
            DocNode::Scalar(CellValue::Boolean(b)) => Value::Bool(*b),
            DocNode::Scalar(CellValue::Text(s)) => Value::String(s.clone()),
            DocNode::Sequence(items) => Value::Array(items.iter().map(DocNode::to_json).collect()),
            DocNode::Mapping(entries) => Value::Object(
                entries
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect(),
            ),
        }
    }
}

/// A slash-separated location inside a document (`partial_closure/school`,
/// `routes/0/name`). The empty path is the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DocPath(pub Vec<String>);

impl DocPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn child(&self, seg: impl Into<String>) -> Self {
        let mut segs = self.0.clone();
        segs.push(seg.into());
        Self(segs)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DocPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl FromStr for DocPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix('/').unwrap_or(s);
        if s.is_empty() {
            return Ok(DocPath::root());
        }
        let segs: Vec<String> = s.split('/').map(str::to_string).collect();
        if segs.iter().any(|seg| seg.trim().is_empty()) {
            return Err(format!("path `{s}` has an empty segment"));
        }
        Ok(DocPath(segs))
    }
}

/// A parsed YAML or JSON input file.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTree {
    pub source_path: String,
    pub root: DocNode,
}

impl DocumentTree {
    pub fn resolve(&self, path: &DocPath) -> Option<&DocNode> {
        self.root.resolve(path)
    }
}

pub fn load_document(path: &Path) -> Result<DocumentTree, LoadError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LoadError::FileMissing { path: display.clone() },
        std::io::ErrorKind::InvalidData => LoadError::Syntax {
            path: display.clone(),
            line: 1,
            col: 1,
            reason: "file is not valid UTF-8".into(),
        },
        _ => LoadError::Io {
            path: display.clone(),
            source: e,
        },
    })?;
    parse_document(&display, &text)
}

/// Parses YAML (and therefore JSON) text. Duplicate mapping keys are an
/// error rather than last-wins; non-finite numbers are rejected.
pub fn parse_document(source_path: &str, text: &str) -> Result<DocumentTree, LoadError> {
    let mut builder = TreeBuilder::new(source_path);
    let mut parser = Parser::new_from_str(text);
    if let Err(e) = parser.load(&mut builder, false) {
        return Err(LoadError::Syntax {
            path: source_path.to_string(),
            line: e.marker().line(),
            col: e.marker().col() + 1,
            reason: e.info().to_string(),
        });
    }
    if let Some(err) = builder.error {
        return Err(err);
    }
    let root = builder.root.unwrap_or(DocNode::Scalar(CellValue::Null));
    Ok(DocumentTree {
        source_path: source_path.to_string(),
        root,
    })
}

enum Frame {
    Seq(Vec<DocNode>, usize),
    Map {
        entries: Vec<(String, DocNode)>,
        pending_key: Option<(String, usize)>,
        anchor: usize,
    },
}

struct TreeBuilder {
    path: String,
    stack: Vec<Frame>,
    anchors: HashMap<usize, DocNode>,
    root: Option<DocNode>,
    error: Option<LoadError>,
    docs: usize,
}

impl TreeBuilder {
    fn new(path: &str) -> Self {
        Self {
            path: path.to_string(),
            stack: Vec::new(),
            anchors: HashMap::new(),
            root: None,
            error: None,
            docs: 0,
        }
    }

    fn fail(&mut self, err: LoadError) {
        if self.error.is_none() {
            self.error = Some(err);
        }
    }

    fn current_path(&self) -> Vec<String> {
        let mut segs = Vec::new();
        for frame in &self.stack {
            match frame {
                Frame::Seq(items, _) => segs.push(items.len().to_string()),
                Frame::Map { pending_key, .. } => {
                    if let Some((k, _)) = pending_key {
                        segs.push(k.clone());
                    }
                }
            }
        }
        segs
    }

    fn push_value(&mut self, node: DocNode, mark: Marker) {
        let path = self.current_path();
        match self.stack.last_mut() {
            None => self.root = Some(node),
            Some(Frame::Seq(items, _)) => items.push(node),
            Some(Frame::Map {
                entries,
                pending_key,
                ..
            }) => match pending_key.take() {
                None => {
                    let key = match node {
                        DocNode::Scalar(v) => v.render(),
                        _ => {
                            self.error.get_or_insert(LoadError::Syntax {
                                path: self.path.clone(),
                                line: mark.line(),
                                col: mark.col() + 1,
                                reason: "mapping keys must be scalars".into(),
                            });
                            return;
                        }
                    };
                    if entries.iter().any(|(k, _)| *k == key) {
                        let mut key_path = path;
                        key_path.push(key);
                        self.error.get_or_insert(LoadError::DuplicateKey {
                            path: self.path.clone(),
                            key_path: key_path.join("/"),
                            line: mark.line(),
                        });
                        return;
                    }
                    *pending_key = Some((key, mark.line()));
                }
                Some((key, _)) => entries.push((key, node)),
            },
        }
    }

    fn scalar(&mut self, value: String, style: TScalarStyle, tag: Option<Tag>, mark: Marker) -> DocNode {
        let plain = matches!(style, TScalarStyle::Plain);
        let tag_suffix = tag.as_ref().map(|t| t.suffix.as_str());
        if tag_suffix == Some("str") || (!plain && tag_suffix.is_none()) {
            return DocNode::Scalar(CellValue::Text(value));
        }
        match resolve_plain(&value) {
            Ok(v) => DocNode::Scalar(v),
            Err(reason) => {
                self.fail(LoadError::Syntax {
                    path: self.path.clone(),
                    line: mark.line(),
                    col: mark.col() + 1,
                    reason,
                });
                DocNode::Scalar(CellValue::Null)
            }
        }
    }
}

impl MarkedEventReceiver for TreeBuilder {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        if self.error.is_some() {
            return;
        }
        match ev {
            Event::DocumentStart => {
                self.docs += 1;
            }
            Event::Scalar(value, style, anchor, tag) => {
                let node = self.scalar(value, style, tag, mark);
                if anchor > 0 {
                    self.anchors.insert(anchor, node.clone());
                }
                self.push_value(node, mark);
            }
            Event::Alias(id) => match self.anchors.get(&id).cloned() {
                Some(node) => self.push_value(node, mark),
                None => self.fail(LoadError::Syntax {
                    path: self.path.clone(),
                    line: mark.line(),
                    col: mark.col() + 1,
                    reason: "alias refers to an unknown or unfinished anchor".into(),
                }),
            },
            Event::SequenceStart(anchor, _) => self.stack.push(Frame::Seq(Vec::new(), anchor)),
            Event::SequenceEnd => {
                if let Some(Frame::Seq(items, anchor)) = self.stack.pop() {
                    let node = DocNode::Sequence(items);
                    if anchor > 0 {
                        self.anchors.insert(anchor, node.clone());
                    }
                    self.push_value(node, mark);
                }
            }
            Event::MappingStart(anchor, _) => self.stack.push(Frame::Map {
                entries: Vec::new(),
                pending_key: None,
                anchor,
            }),
            Event::MappingEnd => {
                if let Some(Frame::Map { entries, anchor, .. }) = self.stack.pop() {
                    let node = DocNode::Mapping(entries);
                    if anchor > 0 {
                        self.anchors.insert(anchor, node.clone());
                    }
                    self.push_value(node, mark);
                }
            }
            _ => {}
        }
    }
}

/// YAML core-schema resolution for plain scalars.
fn resolve_plain(raw: &str) -> Result<CellValue, String> {
    let t = raw.trim();
    match t {
        "" | "~" | "null" | "Null" | "NULL" => return Ok(CellValue::Null),
        "true" | "True" | "TRUE" => return Ok(CellValue::Boolean(true)),
        "false" | "False" | "FALSE" => return Ok(CellValue::Boolean(false)),
        _ => {}
    }
    let lower = t.to_ascii_lowercase();
    let unsigned = lower.trim_start_matches(['+', '-']);
    if matches!(unsigned, ".inf" | ".nan") {
        return Err(format!("non-finite number `{t}` is not allowed"));
    }
    if let Some(hex) = lower.strip_prefix("0x") {
        if let Ok(i) = i64::from_str_radix(hex, 16) {
            return Ok(CellValue::Integer(i));
        }
    }
    if let Some(oct) = lower.strip_prefix("0o") {
        if let Ok(i) = i64::from_str_radix(oct, 8) {
            return Ok(CellValue::Integer(i));
        }
    }
    if is_yaml_int(t) {
        if let Ok(i) = t.parse::<i64>() {
            return Ok(CellValue::Integer(i));
        }
    }
    if is_yaml_float(t) {
        return match t.parse::<f64>() {
            Ok(r) if r.is_finite() => Ok(CellValue::Real(r)),
            _ => Err(format!("non-finite number `{t}` is not allowed")),
        };
    }
    Ok(CellValue::Text(t.to_string()))
}

fn is_yaml_int(t: &str) -> bool {
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit())
}

fn is_yaml_float(t: &str) -> bool {
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let mut parts = mantissa.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next();
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = match frac_part {
        Some(frac) => digits(int_part) && digits(frac) && !(int_part.is_empty() && frac.is_empty()),
        None => !int_part.is_empty() && digits(int_part),
    };
    let exponent_ok = match exponent {
        None => true,
        Some(e) => {
            let e = e.strip_prefix(['+', '-']).unwrap_or(e);
            !e.is_empty() && digits(e)
        }
    };
    mantissa_ok && exponent_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<DocumentTree, LoadError> {
        parse_document("doc.yml", text)
    }

    #[test]
    fn json_object() {
        let doc = parse(r#"{"a": 1}"#).unwrap();
        assert_eq!(
            doc.root,
            DocNode::Mapping(vec![("a".into(), DocNode::Scalar(CellValue::Integer(1)))])
        );
    }

    #[test]
    fn nested_partial_closure() {
        let doc = parse("partial_closure:\n  leisure: 0.5\n  school: 1\n").unwrap();
        let pc = doc.root.get("partial_closure").unwrap();
        assert!(matches!(pc, DocNode::Mapping(e) if e.len() == 2));
        let p: DocPath = "partial_closure/leisure".parse().unwrap();
        assert_eq!(doc.resolve(&p).unwrap().as_scalar(), Some(&CellValue::Real(0.5)));
    }

    #[test]
    fn duplicate_key_is_an_error() {
        match parse("a:\n  x: 1\n  x: 2\n") {
            Err(LoadError::DuplicateKey { key_path, .. }) => assert_eq!(key_path, "a/x"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse(r#"{"x": 1, "x": 2}"#), Err(LoadError::DuplicateKey { .. })));
    }

    #[test]
    fn quoted_numerals_are_strings() {
        let doc = parse("a: '12'\nb: 12\nc: 1.5e3\nd: ~\ne: yes\n").unwrap();
        assert_eq!(doc.root.get("a").unwrap().as_scalar(), Some(&CellValue::Text("12".into())));
        assert_eq!(doc.root.get("b").unwrap().as_scalar(), Some(&CellValue::Integer(12)));
        assert_eq!(doc.root.get("c").unwrap().as_scalar(), Some(&CellValue::Real(1500.0)));
        assert_eq!(doc.root.get("d").unwrap().as_scalar(), Some(&CellValue::Null));
        assert_eq!(doc.root.get("e").unwrap().as_scalar(), Some(&CellValue::Text("yes".into())));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse("a:\n\tb: 1\n") {
            Err(LoadError::Syntax { line, .. }) => assert!(line >= 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("a: [1, 2\n").is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(parse("a: .nan\n").is_err());
        assert!(parse("a: -.inf\n").is_err());
    }

    #[test]
    fn aliases_expand() {
        let doc = parse("base: &b {x: 1}\ncopy: *b\n").unwrap();
        assert_eq!(doc.root.get("base"), doc.root.get("copy"));
    }

    #[test]
    fn path_parsing() {
        assert!("a//b".parse::<DocPath>().is_err());
        assert_eq!("/a/0".parse::<DocPath>().unwrap().0, vec!["a", "0"]);
        assert!("".parse::<DocPath>().unwrap().is_root());
    }
}
