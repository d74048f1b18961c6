use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use super::{ModelConfig, ModelError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNormParams<T> {
    pub gamma: Matrix<T>,
    pub beta: Matrix<T>,
}

/// Weight `in×out` and bias `1×out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine<T> {
    pub weight: Matrix<T>,
    pub bias: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayer<T> {
    pub attn_norm: LayerNormParams<T>,
    pub query: Affine<T>,
    pub key: Affine<T>,
    pub value: Affine<T>,
    pub output: Affine<T>,
    pub ffn_norm: LayerNormParams<T>,
    pub ffn_in: Affine<T>,
    pub ffn_out: Affine<T>,
}

/// Every trainable tensor of the tagger. Also used to hold gradients and
/// optimizer moments, which share the exact same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub embedding: Matrix<T>,
    pub layers: Vec<EncoderLayer<T>>,
    pub final_norm: LayerNormParams<T>,
    pub head: Vec<Affine<T>>,
}

impl<T: Scalar> LayerNormParams<T> {
    fn new(d: usize) -> Self {
        LayerNormParams { gamma: Matrix::filled(1, d, T::one()), beta: Matrix::zeros(1, d) }
    }
}

impl<T: Scalar> Affine<T> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Affine { weight: Matrix::zeros(fan_in, fan_out), bias: Matrix::zeros(1, fan_out) }
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Correctly shaped parameters with layer-norm scales at one and every
    /// other entry zero.
    pub fn zeros(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let d = config.d_model;
        let layers = (0..config.n_layers)
            .map(|_| EncoderLayer {
                attn_norm: LayerNormParams::new(d),
                query: Affine::zeros(d, d),
                key: Affine::zeros(d, d),
                value: Affine::zeros(d, d),
                output: Affine::zeros(d, d),
                ffn_norm: LayerNormParams::new(d),
                ffn_in: Affine::zeros(d, config.d_ff),
                ffn_out: Affine::zeros(config.d_ff, d),
            })
            .collect();
        let head = (0..config.head_depth)
            .map(|i| {
                let out = if i + 1 == config.head_depth { config.n_labels } else { d };
                Affine::zeros(d, out)
            })
            .collect();
        Ok(ModelParams {
            config: config.clone(),
            embedding: Matrix::zeros(config.vocab_size, d),
            layers,
            final_norm: LayerNormParams::new(d),
            head,
        })
    }

    /// Same layout, all entries zero. Used for gradient accumulators.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.as_mut_slice().iter_mut().for_each(|v| *v = T::zero());
        }
        out
    }

    /// Tensors in declaration order with stable dotted names.
    pub fn named_tensors(&self) -> Vec<(String, &Matrix<T>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for (i, layer) in self.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            out.push((format!("{p}.attn_norm.gamma"), &layer.attn_norm.gamma));
            out.push((format!("{p}.attn_norm.beta"), &layer.attn_norm.beta));
            for (name, aff) in
                [("query", &layer.query), ("key", &layer.key), ("value", &layer.value), ("output", &layer.output)]
            {
                out.push((format!("{p}.{name}.weight"), &aff.weight));
                out.push((format!("{p}.{name}.bias"), &aff.bias));
            }
            out.push((format!("{p}.ffn_norm.gamma"), &layer.ffn_norm.gamma));
            out.push((format!("{p}.ffn_norm.beta"), &layer.ffn_norm.beta));
            out.push((format!("{p}.ffn_in.weight"), &layer.ffn_in.weight));
            out.push((format!("{p}.ffn_in.bias"), &layer.ffn_in.bias));
            out.push((format!("{p}.ffn_out.weight"), &layer.ffn_out.weight));
            out.push((format!("{p}.ffn_out.bias"), &layer.ffn_out.bias));
        }
        out.push(("final_norm.gamma".to_string(), &self.final_norm.gamma));
        out.push(("final_norm.beta".to_string(), &self.final_norm.beta));
        for (i, aff) in self.head.iter().enumerate() {
            out.push((format!("head.{i}.weight"), &aff.weight));
            out.push((format!("head.{i}.bias"), &aff.bias));
        }
        out
    }

    /// Mutable tensors, same order as [`ModelParams::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut out = vec![&mut self.embedding];
        for layer in &mut self.layers {
            out.push(&mut layer.attn_norm.gamma);
            out.push(&mut layer.attn_norm.beta);
            for aff in [&mut layer.query, &mut layer.key, &mut layer.value, &mut layer.output] {
                out.push(&mut aff.weight);
                out.push(&mut aff.bias);
            }
            out.push(&mut layer.ffn_norm.gamma);
            out.push(&mut layer.ffn_norm.beta);
            out.push(&mut layer.ffn_in.weight);
            out.push(&mut layer.ffn_in.bias);
            out.push(&mut layer.ffn_out.weight);
            out.push(&mut layer.ffn_out.bias);
        }
        out.push(&mut self.final_norm.gamma);
        out.push(&mut self.final_norm.beta);
        for aff in &mut self.head {
            out.push(&mut aff.weight);
            out.push(&mut aff.bias);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Adds `other` element-wise; layouts must match.
    pub fn accumulate(&mut self, other: &ModelParams<T>) {
        let theirs = other.named_tensors();
        for (mine, (_, t)) in self.tensors_mut().into_iter().zip(theirs) {
            mine.add_assign(t);
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            t.scale(factor);
        }
    }

    /// First tensor holding a NaN or infinity, by name.
    pub fn first_non_finite(&self) -> Option<String> {
        self.named_tensors().into_iter().find(|(_, t)| !t.is_finite()).map(|(n, _)| n)
    }

    pub fn global_norm(&self) -> T {
        self.named_tensors().iter().map(|(_, t)| t.sum_of_squares()).sum::<T>().sqrt()
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let cast_norm = |n: &LayerNormParams<T>| LayerNormParams { gamma: n.gamma.cast(), beta: n.beta.cast() };
        let cast_aff = |a: &Affine<T>| Affine { weight: a.weight.cast(), bias: a.bias.cast() };
        ModelParams {
            config: self.config.clone(),
            embedding: self.embedding.cast(),
            layers: self
                .layers
                .iter()
                .map(|l| EncoderLayer {
                    attn_norm: cast_norm(&l.attn_norm),
                    query: cast_aff(&l.query),
                    key: cast_aff(&l.key),
                    value: cast_aff(&l.value),
                    output: cast_aff(&l.output),
                    ffn_norm: cast_norm(&l.ffn_norm),
                    ffn_in: cast_aff(&l.ffn_in),
                    ffn_out: cast_aff(&l.ffn_out),
                })
                .collect(),
            final_norm: cast_norm(&self.final_norm),
            head: self.head.iter().map(cast_aff).collect(),
        }
    }
}

/// Seeded initialization: Xavier-uniform weight matrices (embedding
/// included), zero biases and offsets, unit layer-norm scales.
pub fn init_params<T: Scalar>(config: &ModelConfig) -> Result<ModelParams<T>, ModelError> {
    let mut params = ModelParams::zeros(config)?;
    let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for (name, tensor) in names.iter().zip(params.tensors_mut()) {
        if name.ends_with("gamma") || name.ends_with("beta") || name.ends_with("bias") {
            continue;
        }
        let (fan_in, fan_out) = tensor.shape();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in tensor.as_mut_slice() {
            *v = T::lit(rng.gen_range(-limit..limit));
        }
    }
    Ok(params)
}
