use std::path::PathBuf;

use anyhow::Context;
use serde_json::json;
use simguard_bench::scaling::time_validation;
use simguard_bench::{
    generate_corpus, inject_violations, plan_injections, run_scaling, score, CorpusParams, ScalingConfig, Sweep,
};
use simguard_core::{validate, RunOptions};

use crate::{emit, Format, EXIT_OK, EXIT_VIOLATIONS};

#[derive(clap::Args)]
pub struct Args {
    /// Data files per corpus (1-100).
    #[arg(long, default_value_t = 1)]
    files: usize,
    /// Rows per data file (100-1000).
    #[arg(long, default_value_t = 100)]
    rows: usize,
    /// Variable columns per data file (10-100).
    #[arg(long, default_value_t = 10)]
    cols: usize,
    /// Constraint mix level (1-10).
    #[arg(long, default_value_t = 1)]
    complexity: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timed repetitions per point.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Untimed runs before measuring.
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    /// Sweep one dimension, e.g. `files=1:100` or `rows=100,500,1000`.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Inject this many violations and score detection instead of timing.
    #[arg(long)]
    inject: Option<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the generated corpus and its spec here.
    #[arg(long)]
    write_corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

pub fn run(a: Args) -> anyhow::Result<u8> {
    let params = CorpusParams {
        complexity: a.complexity,
        columns: a.cols,
        rows: a.rows,
        files: a.files,
        seed: a.seed,
    };
    if let Some(k) = a.inject {
        return inject(&a, params, k);
    }
    if let Some(dir) = &a.write_corpus {
        let corpus = generate_corpus(&params)?;
        corpus.write_to(dir).with_context(|| format!("writing corpus to {}", dir.display()))?;
    }
    let text = match &a.sweep {
        Some(sweep) => {
            let cfg = ScalingConfig {
                warmup: a.warmup,
                reps: a.reps,
                jobs: a.jobs,
                ..ScalingConfig::new(params, sweep.clone())
            };
            let result = run_scaling(&cfg)?;
            match a.format {
                Format::Text => result.to_table(),
                Format::Json => serde_json::to_string_pretty(&result)? + "\n",
            }
        }
        None => {
            let pt = time_validation(&params, a.warmup, a.reps, a.jobs)?;
            match a.format {
                Format::Text => format!(
                    "rows {}  median {:.3} ms  min {:.3} ms  max {:.3} ms  {:.0} rows/s\n",
                    pt.rows, pt.median_ms, pt.min_ms, pt.max_ms, pt.rows_per_sec
                ),
                Format::Json => serde_json::to_string_pretty(&json!({ "params": params, "timing": pt }))? + "\n",
            }
        }
    };
    if a.jobs != 1 {
        eprintln!("note: timed with --jobs {}; timings are not single-threaded", a.jobs);
    }
    emit(a.out.as_ref(), &text)?;
    Ok(EXIT_OK)
}

fn inject(a: &Args, params: CorpusParams, k: usize) -> anyhow::Result<u8> {
    let corpus = generate_corpus(&params)?;
    let plan = plan_injections(&corpus, k, &[], params.seed)?;
    let dirty = inject_violations(&corpus, &plan)?;
    if let Some(dir) = &a.write_corpus {
        dirty.write_to(dir).with_context(|| format!("writing corpus to {}", dir.display()))?;
    }
    let opts = RunOptions {
        jobs: a.jobs,
        ..RunOptions::default()
    };
    let report = validate(&dirty.spec, &dirty.input_set(), &opts)?;
    let det = score(&report, &plan);
    let text = match a.format {
        Format::Text => {
            let mut s = String::new();
            for i in &plan.ground_truth {
                s.push_str(&format!("injected {:?} {}:{}:{} -> {}\n", i.kind, i.file, i.row, i.column, i.constraint_id));
            }
            s.push_str(&format!(
                "detected tp={} fp={} fn={} precision={:.3} recall={:.3}\n",
                det.true_positives,
                det.false_positives,
                det.false_negatives,
                det.precision(),
                det.recall()
            ));
            s
        }
        Format::Json => serde_json::to_string_pretty(&json!({
            "params": params,
            "ground_truth": plan.ground_truth,
            "detection": det,
            "precision": det.precision(),
            "recall": det.recall(),
        }))? + "\n",
    };
    emit(a.out.as_ref(), &text)?;
    Ok(if det.exact() { EXIT_OK } else { EXIT_VIOLATIONS })
}
