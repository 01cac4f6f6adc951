//! Inference-time Monte-Carlo dropout: dropout injection, averaging of
//! log-probability matrices over seeded stochastic passes, and the
//! sum-of-log-probabilities score.

mod average;
mod dropout;

use thiserror::Error;

use crate::model::ModelError;

pub use average::{mc_average_logprobs, mc_sample_scores, score, score_sequence, MCConfig};
pub(crate) use dropout::dropout_in_place;
pub use dropout::{apply_dropout, InjectionPlan, LayerSelection};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidRate(f64),
    #[error("depth fraction must lie in [0, 1], got {0}")]
    InvalidDepthFraction(f64),
    #[error("sample count must be at least 1")]
    InvalidSampleCount,
    #[error("score input contains non-finite values")]
    NonFiniteInput,
    #[error(transparent)]
    Model(#[from] ModelError),
}
