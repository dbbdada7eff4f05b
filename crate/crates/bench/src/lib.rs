//! Synthetic corpora, violation injection with ground truth, and scaling
//! sweeps for the validator.

pub mod corpus;
pub mod inject;
pub mod scaling;

pub use corpus::{generate_corpus, Corpus, CorpusParams, GenFile};
pub use inject::{
    available_kinds, inject_violations, plan_injections, score, Detection, Injection, InjectionKind, InjectionPlan,
};
pub use scaling::{linear_fit, run_scaling, sweep_points, Dimension, LinearFit, ScalingConfig, ScalingResult, Sweep};

use simguard_core::RunError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("two injections target {file}:{row}:{column}")]
    LocusConflict { file: String, row: usize, column: String },

    #[error("clean corpus reported {0} errors")]
    Dirty(usize),

    #[error(transparent)]
    Run(#[from] RunError),
}
