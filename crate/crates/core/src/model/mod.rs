//! Masked-LM transformer: embedding, pre-layer-norm transformer stack and
//! log-softmax head, all in `f64`.

mod config;
mod forward;
mod logprob;
mod params;
mod weights;

use thiserror::Error;

pub use config::ModelConfig;
pub use forward::{attention_weights_probe, embed, forward, forward_padded};
pub use logprob::LogProbMatrix;
pub use params::{init_random, tensor_layout, Parameters, TensorView};
pub use weights::{
    decode_weights, encode_weights, load_weights, save_weights, FORMAT_VERSION, MAGIC,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("sequence length {len} exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("token id {id} at position {position} is outside the vocabulary (n_t = {n_t})")]
    InvalidToken {
        position: usize,
        id: u32,
        n_t: usize,
    },
    #[error("injection site layer {layer} does not exist (n_layers = {n_layers})")]
    InvalidInjectionSite { layer: usize, n_layers: usize },
    #[error("layer {layer} out of range (n_layers = {n_layers})")]
    InvalidLayer { layer: usize, n_layers: usize },
    #[error("head {head} out of range (n_heads = {n_heads})")]
    InvalidHead { head: usize, n_heads: usize },
    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tensor {0} contains non-finite values")]
    NonFinite(String),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("unsupported weight file version {0}")]
    UnsupportedVersion(u32),
    #[error("not a weight file (bad magic)")]
    BadMagic,
    #[error("malformed weight file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
