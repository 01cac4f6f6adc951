use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InferenceError, InjectionPlan};
use crate::hash::child_seed;
use crate::model::{forward, LogProbMatrix, Parameters};
use crate::vocab::TokenSequence;

/// Number of stochastic passes and the seed they derive from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_samples: usize,
    pub base_seed: u64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            n_samples: 100,
            base_seed: 0,
        }
    }
}

impl MCConfig {
    pub fn new(n_samples: usize, base_seed: u64) -> Result<Self, InferenceError> {
        let mc = MCConfig {
            n_samples,
            base_seed,
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.n_samples == 0 {
            Err(InferenceError::InvalidSampleCount)
        } else {
            Ok(())
        }
    }

    fn sample_rng(&self, k: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(child_seed(self.base_seed, k as u64))
    }
}

fn sample_passes(
    params: &Parameters,
    tokens: &TokenSequence,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<Vec<LogProbMatrix>, InferenceError> {
    mc.validate()?;
    (0..mc.n_samples)
        .into_par_iter()
        .map(|k| Ok(forward(params, tokens, Some(plan), &mut mc.sample_rng(k))?))
        .collect()
}

/// Elementwise mean of `n_samples` dropout passes; sample `k` draws from
/// ChaCha8 seeded with `child_seed(base_seed, k)`.
///
/// Passes may run concurrently on the current rayon pool, but they are
/// summed in sample order, so the result does not depend on scheduling.
/// At rate 0 a single deterministic pass is returned and `mc` only
/// needs to be valid.
pub fn mc_average_logprobs(
    params: &Parameters,
    tokens: &TokenSequence,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<LogProbMatrix, InferenceError> {
    mc.validate()?;
    if plan.rate() == 0.0 {
        return Ok(forward(params, tokens, Some(plan), &mut mc.sample_rng(0))?);
    }
    let samples = sample_passes(params, tokens, plan, mc)?;
    let cfg = params.config();
    let mut acc = Array2::<f64>::zeros((tokens.len(), cfg.n_t));
    for s in &samples {
        acc += s.values();
    }
    acc /= mc.n_samples as f64;
    Ok(LogProbMatrix::from_array(acc))
}

/// `score` of each individual pass, in sample order.
pub fn mc_sample_scores(
    params: &Parameters,
    tokens: &TokenSequence,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<Vec<f64>, InferenceError> {
    sample_passes(params, tokens, plan, mc)?
        .iter()
        .map(score)
        .collect()
}

/// Sum of every entry of `L`, accumulated in row-major order.
pub fn score(logprobs: &LogProbMatrix) -> Result<f64, InferenceError> {
    let mut total = 0.0;
    for &v in logprobs.values().iter() {
        if !v.is_finite() {
            return Err(InferenceError::NonFiniteInput);
        }
        total += v;
    }
    Ok(total)
}

/// `score(mc_average_logprobs(..))`.
pub fn score_sequence(
    params: &Parameters,
    tokens: &TokenSequence,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<f64, InferenceError> {
    score(&mc_average_logprobs(params, tokens, plan, mc)?)
}
