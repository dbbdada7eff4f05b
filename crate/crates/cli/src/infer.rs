use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use simguard_core::infer::{infer_spec, InferenceOptions};
use simguard_core::{validate, GuardSpec, InputSet, RunOptions};

use crate::{emit, EXIT_OK, EXIT_VIOLATIONS};

#[derive(clap::Args)]
pub struct Args {
    /// Directory holding the input files.
    #[arg(long)]
    inputs: PathBuf,
    /// Spec destination; document schemas are written beside it. Stdout
    /// when omitted (schemas are then skipped).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spec name.
    #[arg(long, default_value = "inferred")]
    name: String,
    /// Re-validate the inputs against the written spec.
    #[arg(long, requires = "out")]
    check: bool,
    /// Largest distinct-value count emitted as an enumeration.
    #[arg(long, default_value_t = 10)]
    enum_max: usize,
    /// Fewest rows before enumerations are emitted.
    #[arg(long, default_value_t = 20)]
    enum_min_rows: usize,
    /// Amount subtracted from observed minima and added to maxima.
    #[arg(long, default_value_t = 0.0)]
    padding: f64,
    /// Do not emit uniqueness constraints.
    #[arg(long)]
    no_unique: bool,
}

pub fn run(a: Args) -> anyhow::Result<u8> {
    let inputs = InputSet::from_dir(&a.inputs).with_context(|| format!("reading inputs {}", a.inputs.display()))?;
    let opts = InferenceOptions {
        enum_max_cardinality: a.enum_max,
        enum_min_rows: a.enum_min_rows,
        range_padding: a.padding,
        infer_uniqueness: !a.no_unique,
    };
    let inferred = infer_spec(&inputs, &a.name, &opts)?;
    for w in &inferred.warnings {
        eprintln!("warning: {w}");
    }
    let yaml = inferred.spec.to_yaml();
    emit(a.out.as_ref(), &yaml)?;
    let Some(out) = &a.out else {
        return Ok(EXIT_OK);
    };
    let dir = out.parent().map(PathBuf::from).unwrap_or_default();
    for (rel, schema) in &inferred.spec.schemas {
        let path = dir.join(rel);
        let body = serde_json::to_string_pretty(schema)? + "\n";
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "wrote {} ({} constraints, {} schemas)",
        out.display(),
        inferred.spec.constraints.len(),
        inferred.spec.schemas.len()
    );
    if !a.check {
        return Ok(EXIT_OK);
    }
    let reloaded = GuardSpec::load(out).with_context(|| format!("reloading {}", out.display()))?;
    let report = validate(&reloaded, &inputs, &RunOptions::default())?;
    if report.has_failures() {
        eprint!("{}", report.to_text());
        eprintln!("check: inferred spec rejects its own inputs");
        return Ok(EXIT_VIOLATIONS);
    }
    eprintln!("check: inputs pass the inferred spec ({} checks)", report.totals.evaluated);
    Ok(EXIT_OK)
}
