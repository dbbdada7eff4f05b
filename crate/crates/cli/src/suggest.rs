use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde_json::json;
use simguard_core::suggest::{
    suggest, FileSample, HttpProvider, MockProvider, Provider, Status, SuggestionRequest, SuggestionRun, Task,
    DEFAULT_SAMPLE_ROWS,
};
use simguard_core::{GuardSpec, InputSet};

use crate::{emit, Format, EXIT_OK};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    /// Deterministic offline stand-in.
    Mock,
    /// JSON-over-HTTP endpoint named by SIMGUARD_LLM_ENDPOINT.
    Http,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value = "mock")]
    provider: ProviderKind,
    /// Directory holding the input files to sample.
    #[arg(long)]
    inputs: PathBuf,
    /// Natural-language rule to turn into constraints; inference otherwise.
    #[arg(long)]
    describe: Option<String>,
    /// Existing spec to compare suggestions with.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Free-text context documents included in the prompt.
    #[arg(long)]
    context: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_ROWS)]
    sample_rows: usize,
    /// Prompt size limit in bytes; samples shrink to fit.
    #[arg(long)]
    max_prompt_bytes: Option<usize>,
    /// Provider timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Also write the prompt sent to the provider.
    #[arg(long)]
    prompt_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn sampled(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    [".csv", ".tsv", ".yml", ".yaml", ".json"].iter().any(|e| lower.ends_with(e))
}

pub fn run(a: Args) -> anyhow::Result<u8> {
    let inputs = InputSet::from_dir(&a.inputs).with_context(|| format!("reading inputs {}", a.inputs.display()))?;
    let spec_rel = a.spec.as_ref().and_then(|s| {
        let abs = fs::canonicalize(s).ok()?;
        let root = fs::canonicalize(&a.inputs).ok()?;
        abs.strip_prefix(root).ok().map(|p| p.to_string_lossy().replace('\\', "/"))
    });
    let task = match &a.describe {
        Some(d) if d.trim().is_empty() => bail!("--describe is empty"),
        Some(d) => Task::Generate(d.clone()),
        None => Task::Infer,
    };
    let mut req = SuggestionRequest::new(task);
    req.sample_rows = a.sample_rows;
    req.max_prompt_bytes = a.max_prompt_bytes;
    for path in inputs.paths() {
        if Some(path) == spec_rel.as_deref() {
            continue;
        }
        if !sampled(path) {
            eprintln!("warning: {path}: not a table or document; not sampled");
            continue;
        }
        req.file_samples.push(FileSample::from_bytes(path, &inputs.read(path)?)?);
    }
    for c in &a.context {
        req.context_docs
            .push(fs::read_to_string(c).with_context(|| format!("reading {}", c.display()))?);
    }
    if let Some(s) = &a.spec {
        req.existing_spec = Some(GuardSpec::load(s).with_context(|| format!("loading spec {}", s.display()))?);
    }
    let provider: Box<dyn Provider> = match a.provider {
        ProviderKind::Mock => Box::new(MockProvider::with_inputs(inputs.clone())),
        ProviderKind::Http => Box::new(HttpProvider::from_env()?),
    };
    let run = suggest(&req, provider.as_ref(), Duration::from_secs(a.timeout))?;
    if let Some(p) = &a.prompt_out {
        fs::write(p, &run.prompt).with_context(|| format!("writing {}", p.display()))?;
    }
    for d in &run.parsed.diagnostics {
        eprintln!("warning: {d}");
    }
    let text = match a.format {
        Format::Text => render_text(&run),
        Format::Json => render_json(&run)?,
    };
    emit(a.out.as_ref(), &text)?;
    Ok(EXIT_OK)
}

fn render_text(run: &SuggestionRun) -> String {
    let mut out = String::new();
    if run.parsed.decls.is_empty() {
        out.push_str("constraints: []\n");
    } else {
        out.push_str("constraints:\n");
        for d in &run.parsed.decls {
            let _ = writeln!(out, "  - {}", d.to_json());
        }
    }
    if let Some(outcome) = &run.outcome {
        out.push_str("\n# comparison with the existing spec\n");
        for c in &outcome.comparison {
            let _ = writeln!(
                out,
                "# {:<20} {:<40} {:<40} {}",
                c.status.as_str(),
                c.suggested.as_deref().unwrap_or("-"),
                c.existing.as_deref().unwrap_or("-"),
                c.detail
            );
        }
        let counts: Vec<String> = Status::ALL
            .iter()
            .map(|s| format!("{}={}", s.as_str(), outcome.count(*s)))
            .collect();
        let _ = writeln!(out, "# {}", counts.join(" "));
    }
    out
}

fn render_json(run: &SuggestionRun) -> anyhow::Result<String> {
    let body = json!({
        "suggestions": run.parsed.decls.iter().map(|d| d.to_json()).collect::<Vec<_>>(),
        "diagnostics": run.parsed.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "comparison": run.outcome.as_ref().map(|o| &o.comparison),
    });
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}
