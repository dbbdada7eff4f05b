//! Completion providers: an offline mock and a plain HTTP endpoint.

use std::time::Duration;

use thiserror::Error;

use crate::engine::InputSet;
use crate::hierarchical::NodeSchema;
use crate::infer::{infer_document, infer_spec, infer_tabular, slug, InferenceOptions};
use crate::model::{parse_document, parse_tabular, Artifact, LoadOptions, ValueType};
use crate::spec::{
    ColumnParams, ColumnSelector, ConstraintDecl, ConstraintKind, DocumentParams, ParamValue, SchemaSource, SumAxis,
    SummationParams,
};

use super::parse::render_blocks;
use super::prompt::{FILE_HEADING, TASK_PREFIX};

pub const ENDPOINT_ENV: &str = "SIMGUARD_LLM_ENDPOINT";
/// `Header-Name: value`, or a bare value sent as `Authorization`.
pub const AUTH_ENV: &str = "SIMGUARD_LLM_AUTH";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider not configured: {0}")]
    Unconfigured(String),
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("provider request failed: {0}")]
    Transport(String),
    #[error("provider returned an unusable response: {0}")]
    BadResponse(String),
}

/// A single text-to-text completion call.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str, timeout: Duration) -> Result<String, ProviderError>;
}

/// Answers offline. Inference runs the built-in inference over the full
/// inputs when given, else over the excerpts in the prompt; generation maps
/// common phrasings ("positive", "between a and b", "add up to n") to
/// constraints on the column the description names.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    inputs: Option<InputSet>,
    options: InferenceOptions,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_inputs(inputs: InputSet) -> Self {
        Self {
            inputs: Some(inputs),
            options: InferenceOptions::default(),
        }
    }

    pub fn with_options(mut self, options: InferenceOptions) -> Self {
        self.options = options;
        self
    }

    fn infer(&self, prompt: &Prompt) -> Result<Vec<ConstraintDecl>, ProviderError> {
        if let Some(inputs) = &self.inputs {
            let inferred = infer_spec(inputs, "suggested", &self.options)
                .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
            return Ok(inferred.spec.constraints);
        }
        let mut out = Vec::new();
        for (name, body) in &prompt.files {
            let on = logical_name(name);
            if is_document(name) {
                if let Ok(doc) = parse_document(name, body) {
                    out.push(document_decl(&on, infer_document(&doc)));
                }
            } else if let Ok(ds) = parse_tabular(name, body.as_bytes(), &LoadOptions::for_path(name)) {
                out.extend(infer_tabular(&ds, &on, &self.options));
            }
        }
        Ok(out)
    }

    /// (logical name, column names) of every table known to the mock.
    fn tables(&self, prompt: &Prompt) -> Vec<(String, Vec<String>)> {
        if let Some(inputs) = &self.inputs {
            return inputs
                .paths()
                .filter_map(|p| match inputs.load(p) {
                    Ok(Artifact::Table(ds)) => Some((logical_name(p), ds.column_names().to_vec())),
                    _ => None,
                })
                .collect();
        }
        prompt
            .files
            .iter()
            .filter(|(name, _)| !is_document(name))
            .filter_map(|(name, body)| {
                parse_tabular(name, body.as_bytes(), &LoadOptions::for_path(name))
                    .ok()
                    .map(|ds| (logical_name(name), ds.column_names().to_vec()))
            })
            .collect()
    }
}

fn document_decl(on: &str, schema: NodeSchema) -> ConstraintDecl {
    ConstraintDecl::new(
        format!("{on}.schema"),
        on,
        ConstraintKind::DocumentSchema(DocumentParams {
            schema: SchemaSource::Inline(Box::new(schema)),
            at: None,
        }),
    )
}

fn is_document(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    [".yml", ".yaml", ".json"].iter().any(|e| lower.ends_with(e))
}

fn logical_name(path: &str) -> String {
    let base = path.rsplit('/').next().unwrap_or(path);
    let stem = base.rsplit_once('.').map(|(s, _)| s).filter(|s| !s.is_empty()).unwrap_or(base);
    slug(stem)
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, prompt: &str, _timeout: Duration) -> Result<String, ProviderError> {
        let parsed = Prompt::parse(prompt);
        let decls = match parsed.task.as_deref() {
            Some("infer") => self.infer(&parsed)?,
            Some("generate") => {
                let description = parsed.description.clone().unwrap_or_default();
                generate(&description, &self.tables(&parsed))
            }
            _ => return Err(ProviderError::BadResponse("prompt names no task".into())),
        };
        if decls.is_empty() {
            return Ok("No constraint could be derived from the request.\n".into());
        }
        Ok(format!("Suggested constraints:\n\n{}", render_blocks(&decls)))
    }
}

/// The parts of a prompt the mock reads back.
#[derive(Debug, Default)]
struct Prompt {
    files: Vec<(String, String)>,
    task: Option<String>,
    description: Option<String>,
}

/// Body of the fenced block opening at `lines[start]`, and the index past
/// its closing fence.
fn fenced(lines: &[&str], start: usize) -> Option<(String, usize)> {
    let open = lines.get(start)?.trim();
    let width = open.chars().take_while(|&c| c == '`').count();
    if width < 3 {
        return None;
    }
    let end = (start + 1..lines.len()).find(|&j| {
        let l = lines[j].trim();
        l.len() >= width && l.chars().all(|c| c == '`')
    })?;
    Some((lines[start + 1..end].join("\n") + "\n", end + 1))
}

impl Prompt {
    fn parse(text: &str) -> Self {
        let lines: Vec<&str> = text.lines().collect();
        let mut out = Prompt::default();
        let task_line = lines.iter().rposition(|l| l.starts_with(TASK_PREFIX));
        let mut i = 0;
        while i < task_line.unwrap_or(lines.len()) {
            if let Some(rest) = lines[i].strip_prefix(FILE_HEADING) {
                let name = rest.rsplit_once(" (").map(|(n, _)| n).unwrap_or(rest).to_string();
                if let Some((body, next)) = fenced(&lines, i + 1) {
                    out.files.push((name, body));
                    i = next;
                    continue;
                }
            }
            i += 1;
        }
        if let Some(t) = task_line {
            out.task = Some(lines[t][TASK_PREFIX.len()..].trim().to_string());
            out.description = (t + 1..lines.len())
                .find(|&j| lines[j].trim_start().starts_with("```"))
                .and_then(|j| fenced(&lines, j))
                .map(|(body, _)| body.trim().to_string());
        }
        out
    }
}

fn singular(word: &str) -> String {
    if let Some(s) = word.strip_suffix("ies") {
        format!("{s}y")
    } else if word.ends_with("ss") {
        word.to_string()
    } else if let Some(s) = word.strip_suffix('s').filter(|s| s.len() > 1) {
        s.to_string()
    } else {
        word.to_string()
    }
}

/// Lowercase words with singular forms, separated by single spaces.
fn normalize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '.' || c == '-'))
        .flat_map(|w| w.split('_'))
        .map(|w| w.trim_matches(|c| c == '.' || c == '-').to_lowercase())
        .filter(|w| !w.is_empty())
        .map(|w| singular(&w))
        .collect()
}

fn contains_phrase(words: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase)
}

fn numbers(text: &str) -> Vec<f64> {
    text.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e'))
        .filter_map(|t| t.trim_matches('.').parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .collect()
}

/// The number directly after `phrase` in `text`.
fn number_after(text: &str, phrase: &str) -> Option<f64> {
    let at = text.find(phrase)? + phrase.len();
    numbers(&text[at..]).first().copied().filter(|_| {
        text[at..].trim_start().starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.')
    })
}

/// The table the description is about, and the column it names (longest
/// matching column name wins; a table named in the description breaks ties).
fn locate<'a>(words: &[String], tables: &'a [(String, Vec<String>)]) -> Option<(&'a str, &'a str)> {
    let mut best: Option<(usize, bool, &str, &str)> = None;
    for (on, columns) in tables {
        let named = contains_phrase(words, &normalize(on));
        for c in columns {
            let phrase = normalize(c);
            if contains_phrase(words, &phrase) {
                let cand = (phrase.len(), named, on.as_str(), c.as_str());
                if best.is_none_or(|b| (cand.0, cand.1) > (b.0, b.1)) {
                    best = Some(cand);
                }
            }
        }
    }
    best.map(|(_, _, on, c)| (on, c))
}

fn named_table<'a>(words: &[String], tables: &'a [(String, Vec<String>)]) -> Option<&'a str> {
    tables
        .iter()
        .find(|(on, _)| contains_phrase(words, &normalize(on)))
        .or(tables.first())
        .map(|(on, _)| on.as_str())
}

/// The subject when no known column matches: `<file> <column> must ...`.
fn subject(words: &[String]) -> Option<(String, String)> {
    let verb = words
        .iter()
        .position(|w| ["must", "should", "are", "is", "shall"].contains(&w.as_str()))?;
    let column = words.get(verb.checked_sub(1)?)?.clone();
    let file = verb
        .checked_sub(2)
        .and_then(|i| words.get(i))
        .filter(|w| !["the", "all", "every", "each", "a", "an"].contains(&w.as_str()))
        .map(|w| format!("{w}s"))
        .unwrap_or_else(|| "input".into());
    Some((file, column))
}

fn generate(description: &str, tables: &[(String, Vec<String>)]) -> Vec<ConstraintDecl> {
    let text = description.to_lowercase();
    let words = normalize(&text);
    let has = |w: &str| words.iter().any(|x| x == w);
    let summation = text.contains("add up to") || text.contains("adds up to") || text.contains("sum to") || has("sum");
    if summation {
        let Some(on) = named_table(&words, tables).map(str::to_string).or_else(|| subject(&words).map(|s| s.0)) else {
            return Vec::new();
        };
        let target = ["add up to", "adds up to", "sum to", "equal", "total"]
            .iter()
            .find_map(|p| number_after(&text, p))
            .unwrap_or(1.0);
        let decl = ConstraintDecl::new(
            format!("{on}.row_sum"),
            on,
            ConstraintKind::Summation(SummationParams {
                axis: SumAxis::PerRow,
                columns: ColumnSelector::AllButFirst,
                target: ParamValue::Number(target),
                tolerance: 0.01,
            }),
        );
        return vec![decl];
    }
    let (on, column) = match locate(&words, tables) {
        Some((on, c)) => (on.to_string(), c.to_string()),
        None => match subject(&words) {
            Some(s) => s,
            None => return Vec::new(),
        },
    };
    let mut p = ColumnParams::for_column(column.clone());
    let mut rule = Vec::new();
    let lit = |v: f64| Some(ParamValue::Number(v));
    if text.contains("non-negative") || text.contains("nonnegative") || text.contains("not negative") {
        p.ge = lit(0.0);
        rule.push("non_negative");
    } else if has("positive") {
        p.gt = lit(0.0);
        rule.push("positive");
    } else if has("negative") {
        p.lt = lit(0.0);
        rule.push("negative");
    }
    if let Some(at) = text.find("between ") {
        let rest = &text[at..];
        let a = number_after(rest, "between ");
        let b = rest.find(" and ").and_then(|i| number_after(&rest[i..], " and "));
        if let (Some(a), Some(b)) = (a, b) {
            p.ge = lit(a.min(b));
            p.le = lit(a.max(b));
            rule.push("range");
        }
    }
    for (phrase, slot) in [
        ("at least ", 0),
        ("greater than or equal to ", 0),
        ("greater than ", 1),
        ("at most ", 2),
        ("less than or equal to ", 2),
        ("less than ", 3),
    ] {
        if let Some(v) = number_after(&text, phrase) {
            match slot {
                0 if p.ge.is_none() && p.gt.is_none() => p.ge = lit(v),
                1 if p.ge.is_none() && p.gt.is_none() => p.gt = lit(v),
                2 if p.le.is_none() && p.lt.is_none() => p.le = lit(v),
                3 if p.le.is_none() && p.lt.is_none() => p.lt = lit(v),
                _ => continue,
            }
            rule.push("bound");
        }
    }
    if has("unique") || has("distinct") {
        p.unique = true;
        rule.push("unique");
    }
    let optional = has("optional") || text.contains("may be empty") || text.contains("may be missing");
    p.nullable = optional;
    if has("integer") || has("whole") {
        p.expected_type = Some(ValueType::Integer);
    } else if p.has_bounds() || has("number") || has("numeric") {
        p.expected_type = Some(ValueType::Real);
    } else if text.contains("not be empty") || text.contains("required") || has("present") {
        rule.push("required");
    }
    if rule.is_empty() {
        return Vec::new();
    }
    rule.dedup();
    vec![ConstraintDecl::new(
        format!("{on}.{}.{}", slug(&column), rule.join("_")),
        on,
        ConstraintKind::Column(p),
    )]
}

/// Posts `{"prompt": ...}` to an endpoint and reads the completion from a
/// `completion`, `text`, `content` or `output` field (or the raw body).
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: String,
    auth: Option<(String, String)>,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, auth: Option<&str>) -> Self {
        let auth = auth.filter(|a| !a.trim().is_empty()).map(|a| match a.split_once(':') {
            Some((name, value)) if !name.trim().is_empty() && !name.contains(' ') => {
                (name.trim().to_string(), value.trim().to_string())
            }
            _ => ("Authorization".to_string(), a.trim().to_string()),
        });
        Self {
            endpoint: endpoint.into(),
            auth,
        }
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| ProviderError::Unconfigured(format!("{ENDPOINT_ENV} is not set")))?;
        let auth = std::env::var(AUTH_ENV).ok();
        Ok(Self::new(endpoint, auth.as_deref()))
    }
}

fn completion_text(body: &str) -> Result<String, ProviderError> {
    let Ok(json) = serde_json::from_str::<serde_json::Value>(body) else {
        return Ok(body.to_string());
    };
    let pointers = ["/completion", "/text", "/content", "/output", "/choices/0/message/content", "/content/0/text"];
    pointers
        .iter()
        .find_map(|p| json.pointer(p).and_then(|v| v.as_str()))
        .map(str::to_string)
        .ok_or_else(|| ProviderError::BadResponse("JSON response has no completion text".into()))
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, prompt: &str, timeout: Duration) -> Result<String, ProviderError> {
        let agent = ureq::Agent::new_with_config(ureq::Agent::config_builder().timeout_global(Some(timeout)).build());
        let mut req = agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some((name, value)) = &self.auth {
            req = req.header(name.as_str(), value.as_str());
        }
        let payload = serde_json::json!({ "prompt": prompt }).to_string();
        let mut resp = req.send(payload).map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout(timeout),
            other => ProviderError::Transport(other.to_string()),
        })?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        completion_text(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suggest::{build_prompt, parse_response, FileSample, SuggestionRequest, Task};

    const ROUTES: &str = "name1,name2,distance,forced_redirection\nA,B,10.5,0\nB,C,3,1\n";
    const LOCATIONS: &str = "name,region,country,latitude,longitude,location_type,conflict_date,population\nA,r,X,1.0,2.0,town,,100\n";
    const DEMOGRAPHICS: &str = "category,p0,p1\nage,0.4,0.6\nsex,0.5,0.5\n";

    fn ask(task: Task, files: &[(&str, &str)]) -> Vec<ConstraintDecl> {
        let mut req = SuggestionRequest::new(task);
        for (n, body) in files {
            req.file_samples.push(FileSample::from_bytes(n, body.as_bytes()).unwrap());
        }
        let prompt = build_prompt(&req).unwrap();
        let text = MockProvider::new().complete(&prompt, Duration::from_secs(1)).unwrap();
        let parsed = parse_response(&text);
        assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        parsed.decls
    }

    #[test]
    fn positive_distances() {
        let d = ask(
            Task::Generate("Route distances must be positive numbers".into()),
            &[("locations.csv", LOCATIONS), ("routes.csv", ROUTES)],
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].on, "routes");
        let ConstraintKind::Column(p) = &d[0].kind else { panic!() };
        assert_eq!(p.column.as_deref(), Some("distance"));
        assert_eq!(p.gt, Some(ParamValue::Number(0.0)));
        assert_eq!(p.expected_type, Some(ValueType::Real));
    }

    #[test]
    fn positive_without_samples() {
        let d = ask(Task::Generate("Route distances must be positive numbers".into()), &[]);
        let ConstraintKind::Column(p) = &d[0].kind else { panic!() };
        assert_eq!(p.column.as_deref(), Some("distance"));
        assert_eq!(d[0].on, "routes");
    }

    #[test]
    fn sums_to_one() {
        let d = ask(
            Task::Generate("The sum of all entries in demographic probability columns should add up to 1".into()),
            &[("demographics.csv", DEMOGRAPHICS)],
        );
        assert_eq!(d.len(), 1);
        let ConstraintKind::Summation(p) = &d[0].kind else { panic!() };
        assert_eq!(p.axis, SumAxis::PerRow);
        assert_eq!(p.target, ParamValue::Number(1.0));
        assert_eq!(p.tolerance, 0.01);
    }

    #[test]
    fn ranges_and_unknowns() {
        let d = ask(
            Task::Generate("Latitude must be between -90 and 90".into()),
            &[("locations.csv", LOCATIONS)],
        );
        let ConstraintKind::Column(p) = &d[0].kind else { panic!() };
        assert_eq!((p.ge.clone(), p.le.clone()), (Some(ParamValue::Number(-90.0)), Some(ParamValue::Number(90.0))));
        assert!(ask(Task::Generate("Be nice".into()), &[("locations.csv", LOCATIONS)]).is_empty());
    }

    #[test]
    fn infer_from_excerpts() {
        let d = ask(Task::Infer, &[("routes.csv", ROUTES), ("cfg.yml", "a: 1\nb: [x, y]\n")]);
        assert_eq!(d.len(), 5);
        assert!(d.iter().any(|x| x.id == "routes.distance"));
        assert!(matches!(d[4].kind, ConstraintKind::DocumentSchema(_)));
    }

    #[test]
    fn http_requires_endpoint() {
        assert!(matches!(HttpProvider::from_env(), Err(ProviderError::Unconfigured(_))) || std::env::var(ENDPOINT_ENV).is_ok());
        let p = HttpProvider::new("http://127.0.0.1:9/", Some("X-Key: abc"));
        assert_eq!(p.auth, Some(("X-Key".into(), "abc".into())));
        let p = HttpProvider::new("http://127.0.0.1:9/", Some("Bearer abc"));
        assert_eq!(p.auth, Some(("Authorization".into(), "Bearer abc".into())));
    }

    #[test]
    fn completion_fields() {
        assert_eq!(completion_text(r#"{"completion":"x"}"#).unwrap(), "x");
        assert_eq!(completion_text(r#"{"choices":[{"message":{"content":"y"}}]}"#).unwrap(), "y");
        assert_eq!(completion_text("plain").unwrap(), "plain");
        assert!(completion_text(r#"{"other":1}"#).is_err());
    }
}
