//! Transformer token tagger: a pre-norm encoder over word embeddings with
//! sinusoidal positions, followed by a per-token classification head and a
//! softmax over the 13 labels. Decoding is an independent argmax per token;
//! there is no transition model.

#![allow(clippy::needless_range_loop)]

mod backward;
mod forward;
mod loss;
mod params;
mod tensor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backward::{backward, Batch, ForwardMode};
pub use forward::{classify, encode, predict, EncoderOutput};
pub use loss::{cross_entropy, softmax_rows, ProbDistribution};
pub use params::{init_params, Affine, EncoderLayer, LayerNormParams, ModelParams};
pub use tensor::Matrix;

use crate::corpus::NUM_LABELS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },
    #[error("sequence of length {len} exceeds max_len {max_len}")]
    LengthOverflow { len: usize, max_len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no unmasked positions to average the loss over")]
    NoUnmaskedPositions,
    #[error("gold label {label} out of range for {n_labels} labels")]
    LabelOutOfRange { label: usize, n_labels: usize },
    #[error("non-finite values in {tensor}")]
    NonFinite { tensor: String },
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub n_labels: usize,
    /// Number of affine layers in the classification head (GELU between them).
    pub head_depth: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// The toy profile: small enough to train on a laptop CPU.
    fn default() -> Self {
        ModelConfig {
            vocab_size: 2,
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
            max_len: 128,
            n_labels: NUM_LABELS,
            head_depth: 1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.vocab_size == 0 {
            return bad("vocab_size must be at least 1".into());
        }
        if self.d_model == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return bad("d_model, n_heads and d_ff must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!("d_model {} is not divisible by n_heads {}", self.d_model, self.n_heads));
        }
        if self.max_len == 0 {
            return bad("max_len must be at least 1".into());
        }
        if self.n_labels != NUM_LABELS {
            return bad(format!("n_labels must be {NUM_LABELS}, got {}", self.n_labels));
        }
        if self.head_depth == 0 {
            return bad("head_depth must be at least 1".into());
        }
        Ok(())
    }

    pub fn head_width(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Total trainable scalars implied by the config.
    pub fn param_count(&self) -> usize {
        let d = self.d_model;
        let norm = 2 * d;
        let layer = norm + 4 * (d * d + d) + norm + (d * self.d_ff + self.d_ff) + (self.d_ff * d + d);
        let head = (self.head_depth - 1) * (d * d + d) + d * self.n_labels + self.n_labels;
        self.vocab_size * d + self.n_layers * layer + norm + head
    }
}
