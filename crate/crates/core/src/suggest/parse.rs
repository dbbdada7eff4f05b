//! Extraction of constraint declarations from fenced blocks in a
//! completion.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::{parse_document, DocNode};
use crate::spec::ConstraintDecl;

use super::prompt::fence_for;

/// Info string marking a constraint block.
pub const BLOCK_TAG: &str = "guard-constraint";

/// A block that could not be turned into a declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based index among constraint blocks.
    pub block: usize,
    /// 1-based line of the opening fence.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {} (line {}): {}", self.block, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedResponse {
    pub decls: Vec<ConstraintDecl>,
    pub diagnostics: Vec<Diagnostic>,
}

fn fence_len(line: &str) -> usize {
    line.chars().take_while(|&c| c == '`').count()
}

/// Every well-formed block becomes a declaration; every other block yields
/// a diagnostic. Text outside fences is ignored.
pub fn parse_response(text: &str) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let mut seen = BTreeSet::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut block = 0;
    while i < lines.len() {
        let open = lines[i].trim_start();
        let width = fence_len(open);
        if width < 3 {
            i += 1;
            continue;
        }
        let info = open[width..].split_whitespace().next().unwrap_or("");
        let start = i;
        let close = (start + 1..lines.len()).find(|&j| {
            let l = lines[j].trim();
            fence_len(l) >= width && l.chars().all(|c| c == '`')
        });
        let tagged = info == BLOCK_TAG;
        if tagged {
            block += 1;
        }
        let Some(end) = close else {
            if tagged {
                out.diagnostics.push(Diagnostic {
                    block,
                    line: start + 1,
                    message: "block is never closed".into(),
                });
            }
            break;
        };
        if tagged {
            let body = lines[start + 1..end].join("\n");
            let mut diag = |message: String| {
                out.diagnostics.push(Diagnostic {
                    block,
                    line: start + 1,
                    message,
                })
            };
            match parse_block(&body) {
                Err(e) => diag(e),
                Ok(entries) => {
                    for entry in entries {
                        match entry {
                            Err(e) => diag(e),
                            Ok(d) if !seen.insert(d.id.clone()) => diag(format!("duplicate id `{}`", d.id)),
                            Ok(d) => out.decls.push(d),
                        }
                    }
                }
            }
        }
        i = end + 1;
    }
    out
}

fn parse_block(body: &str) -> Result<Vec<Result<ConstraintDecl, String>>, String> {
    if body.trim().is_empty() {
        return Err("empty block".into());
    }
    let doc = parse_document("response", body).map_err(|e| e.to_string())?;
    let entries = match doc.root {
        DocNode::Mapping(_) => vec![doc.root],
        DocNode::Sequence(items) => items,
        DocNode::Scalar(_) => return Err("block must hold a mapping or a list of mappings".into()),
    };
    Ok(entries.iter().map(|e| ConstraintDecl::from_json(&e.to_json())).collect())
}

/// Declarations as fenced blocks, one per declaration.
pub fn render_blocks(decls: &[ConstraintDecl]) -> String {
    let mut out = String::new();
    for d in decls {
        let body = serde_json::to_string(&d.to_json()).expect("declaration serializes");
        let fence = fence_for(&body);
        out.push_str(&format!("{fence}{BLOCK_TAG}\n{body}\n{fence}\n\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{ConstraintKind, ParamValue};

    #[test]
    fn one_bounds_block() {
        let text = "Here is the check:\n\n```guard-constraint\nid: distance_positive\nkind: column\non: routes\nparams: {column: distance, expected_type: real, gt: 0}\n```\nDone.";
        let r = parse_response(text);
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert_eq!(r.decls.len(), 1);
        let ConstraintKind::Column(p) = &r.decls[0].kind else { panic!() };
        assert_eq!(p.gt, Some(ParamValue::Number(0.0)));
        assert_eq!(p.column.as_deref(), Some("distance"));
    }

    #[test]
    fn prose_only() {
        let r = parse_response("No constraints apply here.\nSee ```inline``` code.");
        assert!(r.decls.is_empty() && r.diagnostics.is_empty());
    }

    #[test]
    fn unknown_kind() {
        let r = parse_response("```guard-constraint\n{id: x, kind: telepathy, on: routes}\n```\n");
        assert_eq!(r.decls.len(), 0);
        assert_eq!(r.diagnostics.len(), 1);
        assert!(r.diagnostics[0].message.contains("telepathy"));
    }

    #[test]
    fn malformed_and_unclosed_reported() {
        let text = "```guard-constraint\nid: [unbalanced\n```\n```python\nx = 1\n```\n```guard-constraint\nid: y\n";
        let r = parse_response(text);
        assert_eq!(r.decls.len(), 0);
        assert_eq!(r.diagnostics.len(), 2);
        assert_eq!(r.diagnostics[1].message, "block is never closed");
        assert_eq!(r.diagnostics[1].line, 7);
    }

    #[test]
    fn other_fences_are_skipped() {
        let text = "```yaml\n```guard-constraint\n```\n";
        assert!(parse_response(text).diagnostics.is_empty());
    }

    #[test]
    fn lists_and_duplicates() {
        let text = "```guard-constraint\n- {id: a, kind: row_count, on: t, params: {min: 1}}\n- {id: a, kind: row_count, on: t, params: {min: 2}}\n```\n";
        let r = parse_response(text);
        assert_eq!(r.decls.len(), 1);
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn render_round_trips() {
        let text = "```guard-constraint\n{id: r, kind: column, on: t, params: {column: 'c`x', expected_type: real, regex: '[a-z]+\\d', ge: 0.1, le: 1e20}}\n```\n";
        let first = parse_response(text);
        assert!(first.diagnostics.is_empty(), "{:?}", first.diagnostics);
        let decls = first.decls;
        assert_eq!(decls.len(), 1);
        let again = parse_response(&render_blocks(&decls));
        assert!(again.diagnostics.is_empty(), "{:?}", again.diagnostics);
        assert_eq!(again.decls, decls);
    }
}
