//! Rank-correlation evaluation against DMS fitness labels, dropout-rate
//! sweeps, and teacher-labelled synthetic benchmarks.

mod stats;
mod sweep;
mod synthetic;

use thiserror::Error;

use crate::mc::InferenceError;
use crate::mutation::MutationError;
use crate::vocab::VocabError;

pub use stats::{average_ranks, median, spearman, StatsError};
pub use sweep::{
    evaluate_family, parse_report_csv, run_sweep, score_family, EvalConfig, FamilyResult,
    Provenance, RateResult, ReportRow, SkippedFamily, SweepReport, DEFAULT_RATE_GRID,
};
pub use synthetic::{generate_synthetic_benchmark, SYNTHETIC_MAX_LEN, SYNTHETIC_MIN_LEN};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("every family was skipped")]
    AllFamiliesSkipped,
    #[error("malformed report CSV: {0}")]
    ReportCsv(String),
}
