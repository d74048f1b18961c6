//! Training hyperparameters and the flat `key = value` config format.

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub dropout: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults sized for a randomly initialised small encoder.
    pub fn toy() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: Some(1.0),
            dropout: 0.1,
            seed: 0,
        }
    }

    /// Fine-tuning settings for large pretrained encoders: learning rate
    /// 2e-5, batch size 32, 10 epochs.
    pub fn fine_tune() -> Self {
        TrainConfig { learning_rate: 2e-5, epochs: 10, ..TrainConfig::toy() }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon must be positive".into());
        }
        if matches!(self.clip_norm, Some(c) if c <= 0.0 || c.is_nan()) {
            return bad("clip_norm must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::toy()
    }
}

/// Model and training settings resolved together.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Sets one option by name. `seed` sets both the model and training seeds.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        fn num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, TrainError> {
            value.parse().map_err(|_| TrainError::InvalidConfig(format!("bad value {value:?} for {key}")))
        }
        let (m, t) = (&mut self.model, &mut self.train);
        match key {
            "learning_rate" | "lr" => t.learning_rate = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "beta1" => t.beta1 = num(key, value)?,
            "beta2" => t.beta2 = num(key, value)?,
            "epsilon" => t.epsilon = num(key, value)?,
            "clip_norm" => {
                t.clip_norm = match value {
                    "none" | "off" => None,
                    v => Some(num(key, v)?),
                }
            }
            "dropout" => t.dropout = num(key, value)?,
            "seed" => {
                t.seed = num(key, value)?;
                m.seed = t.seed;
            }
            "train_seed" => t.seed = num(key, value)?,
            "model_seed" => m.seed = num(key, value)?,
            "d_model" => m.d_model = num(key, value)?,
            "n_layers" => m.n_layers = num(key, value)?,
            "n_heads" => m.n_heads = num(key, value)?,
            "d_ff" => m.d_ff = num(key, value)?,
            "max_len" => m.max_len = num(key, value)?,
            "head_depth" => m.head_depth = num(key, value)?,
            _ => return Err(TrainError::InvalidConfig(format!("unknown option {key}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), TrainError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| TrainError::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| TrainError::InvalidConfig(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// The resolved settings in the same `key = value` format.
    pub fn to_text(&self) -> String {
        let (m, t) = (&self.model, &self.train);
        let clip = t.clip_norm.map_or_else(|| "none".to_string(), |c| c.to_string());
        [
            format!("learning_rate = {}", t.learning_rate),
            format!("batch_size = {}", t.batch_size),
            format!("epochs = {}", t.epochs),
            format!("beta1 = {}", t.beta1),
            format!("beta2 = {}", t.beta2),
            format!("epsilon = {}", t.epsilon),
            format!("clip_norm = {clip}"),
            format!("dropout = {}", t.dropout),
            format!("train_seed = {}", t.seed),
            format!("model_seed = {}", m.seed),
            format!("d_model = {}", m.d_model),
            format!("n_layers = {}", m.n_layers),
            format!("n_heads = {}", m.n_heads),
            format!("d_ff = {}", m.d_ff),
            format!("max_len = {}", m.max_len),
            format!("head_depth = {}", m.head_depth),
        ]
        .join("\n")
            + "\n"
    }
}
