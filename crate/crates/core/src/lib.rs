//! Zero-shot protein fitness scoring with inference-time Monte-Carlo dropout.
//!
//! A masked protein language model maps a sequence to an `n_a × n_t` matrix
//! of log-probabilities. Dropout is injected after the embedding layer (and
//! optionally after the first few transformer layers), the log-probability
//! matrices of many seeded stochastic passes are averaged, and the sum of
//! all entries of the average is the fitness proxy. Proxies are evaluated
//! against DMS labels by Spearman rank correlation, summarised by the median
//! over families.

pub mod dataset;
pub mod eval;
pub mod hash;
pub mod mc;
pub mod model;
pub mod mutation;
pub mod vocab;

pub use dataset::{FamilyDataset, MutantRecord};
pub use mc::{mc_average_logprobs, score, score_sequence, InjectionPlan, MCConfig};
pub use model::{forward, init_random, LogProbMatrix, ModelConfig, Parameters};
pub use vocab::{default_vocabulary, TokenSequence, Vocabulary};
