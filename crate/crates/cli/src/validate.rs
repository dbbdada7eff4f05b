use std::path::PathBuf;

use anyhow::Context;
use simguard_core::{validate, GuardSpec, InputSet, RunOptions};

use crate::{emit, Format, EXIT_OK, EXIT_VIOLATIONS};

#[derive(clap::Args)]
pub struct Args {
    /// Guard spec (YAML).
    #[arg(long)]
    spec: PathBuf,
    /// Directory holding the input files.
    #[arg(long)]
    inputs: PathBuf,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Worker threads; 0 uses every processor.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Stop after the first file with a failing check.
    #[arg(long)]
    fail_fast: bool,
}

pub fn run(a: Args) -> anyhow::Result<u8> {
    let spec = GuardSpec::load(&a.spec).with_context(|| format!("loading spec {}", a.spec.display()))?;
    let inputs = InputSet::from_dir(&a.inputs).with_context(|| format!("reading inputs {}", a.inputs.display()))?;
    let opts = RunOptions {
        jobs: a.jobs,
        fail_fast: a.fail_fast,
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let report = validate(&spec, &inputs, &opts)?;
    let text = match a.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    emit(a.out.as_ref(), &text)?;
    if a.out.is_some() {
        let t = &report.totals;
        eprintln!(
            "{}: {} checks, {} passed, {} failed, {} warnings",
            spec.name, t.evaluated, t.passed, t.failed, t.warnings
        );
    }
    Ok(if report.has_failures() { EXIT_VIOLATIONS } else { EXIT_OK })
}
