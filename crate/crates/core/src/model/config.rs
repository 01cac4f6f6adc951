use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::hash::fnv1a64;

/// Shape hyperparameters of the masked-LM transformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Vocabulary size.
    pub n_t: usize,
    /// Longest supported sequence.
    pub max_len: usize,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    /// Desk-scale default: 4 layers, width 64, 4 heads.
    fn default() -> Self {
        ModelConfig {
            n_layers: 4,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            n_t: 27,
            max_len: 512,
            ln_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::Config(msg));
        for (name, v) in [
            ("n_layers", self.n_layers),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("n_t", self.n_t),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                return err(format!("{name} must be positive"));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return err(format!(
                "n_heads ({}) must divide d_model ({})",
                self.n_heads, self.d_model
            ));
        }
        if !(self.ln_eps.is_finite() && self.ln_eps > 0.0) {
            return err(format!(
                "ln_eps must be positive and finite, got {}",
                self.ln_eps
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// FNV-1a of the canonical JSON form.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
