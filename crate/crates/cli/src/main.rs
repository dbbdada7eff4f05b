mod bench;
mod infer;
mod suggest;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Exit status: clean run.
pub const EXIT_OK: u8 = 0;
/// Exit status: checks failed.
pub const EXIT_VIOLATIONS: u8 = 1;
/// Exit status: the run itself failed.
pub const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "simguard", version, about = "Verify simulation input files against declarative constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an input directory against a guard spec.
    Validate(validate::Args),
    /// Infer a guard spec from an input directory.
    Infer(infer::Args),
    /// Ask a provider for constraint suggestions.
    Suggest(suggest::Args),
    /// Generate synthetic corpora and time validation.
    Bench(bench::Args),
}

/// Writes `text` to `out`, or stdout when absent.
pub fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    use anyhow::Context;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => validate::run(a),
        Command::Infer(a) => infer::run(a),
        Command::Suggest(a) => suggest::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("simguard: error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
