//! Encoder and head forward passes.
//!
//! Each encoder layer is pre-norm:
//!
//! ```text
//! x ─ LN ─ multi-head attention ─ dropout ─(+)─ LN ─ GELU FFN ─ dropout ─(+)─▶
//! └──────────────────────────────────────────┘ └──────────────────────────┘
//! ```
//!
//! A final layer norm produces the hidden states handed to the head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::loss::{softmax_rows, ProbDistribution};
use super::params::{LayerNormParams, ModelParams};
use super::tensor::{affine, apply_mask, gelu, Matrix};
use super::ModelError;
use crate::corpus::{BioTag, Sentence};
use crate::scalar::Scalar;
use crate::vocab::Vocabulary;

pub(crate) const LN_EPS: f64 = 1e-5;

/// Hidden states, one `d_model` row per input position.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput<T> {
    pub hidden: Matrix<T>,
}

pub(crate) struct NormTrace<T> {
    pub xhat: Matrix<T>,
    pub inv_std: Vec<T>,
}

pub(crate) struct LayerTrace<T> {
    pub attn_norm: NormTrace<T>,
    pub normed: Matrix<T>,
    pub q: Matrix<T>,
    pub k: Matrix<T>,
    pub v: Matrix<T>,
    /// Attention weights per head, `len×len`; masked keys hold exact zeros.
    pub probs: Vec<Matrix<T>>,
    pub context: Matrix<T>,
    pub attn_drop: Option<Vec<T>>,
    pub ffn_norm: NormTrace<T>,
    pub ffn_input: Matrix<T>,
    pub ffn_pre: Matrix<T>,
    pub ffn_act: Matrix<T>,
    pub ffn_drop: Option<Vec<T>>,
}

pub(crate) struct Trace<T> {
    pub layers: Vec<LayerTrace<T>>,
    pub final_norm: NormTrace<T>,
    pub hidden: Matrix<T>,
    /// Input to each head layer (the first is `hidden`).
    pub head_inputs: Vec<Matrix<T>>,
    /// Pre-activation output of each head layer; the last is the logits.
    pub head_pre: Vec<Matrix<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn logits(&self) -> &Matrix<T> {
        self.head_pre.last().expect("head has at least one layer")
    }
}

/// Inverted dropout: kept units are scaled by `1/(1-rate)`.
pub(crate) struct Dropout {
    pub rate: f64,
    pub rng: ChaCha8Rng,
}

impl Dropout {
    fn sample<T: Scalar>(&mut self, n: usize) -> Vec<T> {
        let keep = T::lit(1.0 / (1.0 - self.rate));
        (0..n).map(|_| if self.rng.gen::<f64>() < self.rate { T::zero() } else { keep }).collect()
    }
}

pub(crate) fn sinusoidal_position<T: Scalar>(pos: usize, dim: usize, d_model: usize) -> T {
    let pair = (dim / 2) as f64;
    let angle = pos as f64 / 10_000f64.powf(2.0 * pair / d_model as f64);
    T::lit(if dim.is_multiple_of(2) { angle.sin() } else { angle.cos() })
}

fn layer_norm<T: Scalar>(x: &Matrix<T>, p: &LayerNormParams<T>) -> (Matrix<T>, NormTrace<T>) {
    let (rows, cols) = x.shape();
    let n = T::lit(cols as f64);
    let mut xhat = Matrix::zeros(rows, cols);
    let mut out = Matrix::zeros(rows, cols);
    let mut inv_std = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = x.row(r);
        let mean = row.iter().copied().sum::<T>() / n;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let inv = T::one() / (var + T::lit(LN_EPS)).sqrt();
        inv_std.push(inv);
        for c in 0..cols {
            let h = (row[c] - mean) * inv;
            xhat.set(r, c, h);
            out.set(r, c, p.gamma.get(0, c) * h + p.beta.get(0, c));
        }
    }
    (out, NormTrace { xhat, inv_std })
}

/// Scaled dot-product attention per head; masked keys are excluded from
/// the softmax, i.e. receive a weight of exactly zero.
fn attention<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    mask: &[bool],
    n_heads: usize,
) -> (Vec<Matrix<T>>, Matrix<T>) {
    let (len, d) = q.shape();
    let dh = d / n_heads;
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let mut context = Matrix::zeros(len, d);
    let mut all_probs = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let cols = h * dh..(h + 1) * dh;
        let mut probs = Matrix::zeros(len, len);
        for i in 0..len {
            let qi = &q.row(i)[cols.clone()];
            let mut max = T::neg_infinity();
            for j in (0..len).filter(|&j| mask[j]) {
                let kj = &k.row(j)[cols.clone()];
                let s = qi.iter().zip(kj).map(|(&a, &b)| a * b).sum::<T>() * scale;
                probs.set(i, j, s);
                max = max.max(s);
            }
            if max == T::neg_infinity() {
                continue;
            }
            let mut total = T::zero();
            for j in 0..len {
                let e = if mask[j] { (probs.get(i, j) - max).exp() } else { T::zero() };
                probs.set(i, j, e);
                total += e;
            }
            for j in 0..len {
                let p = probs.get(i, j) / total;
                probs.set(i, j, p);
                if p != T::zero() {
                    let vj = &v.row(j)[cols.clone()];
                    for (c, &vv) in cols.clone().zip(vj) {
                        context.set(i, c, context.get(i, c) + p * vv);
                    }
                }
            }
        }
        all_probs.push(probs);
    }
    (all_probs, context)
}

pub(crate) fn check_input<T: Scalar>(
    params: &ModelParams<T>,
    token_ids: &[usize],
    mask: &[bool],
) -> Result<(), ModelError> {
    let cfg = &params.config;
    if token_ids.len() != mask.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} token ids but {} mask entries",
            token_ids.len(),
            mask.len()
        )));
    }
    if token_ids.len() > cfg.max_len {
        return Err(ModelError::LengthOverflow { len: token_ids.len(), max_len: cfg.max_len });
    }
    if let Some(&id) = token_ids.iter().find(|&&id| id >= cfg.vocab_size) {
        return Err(ModelError::TokenOutOfRange { id, vocab_size: cfg.vocab_size });
    }
    Ok(())
}

/// Full forward pass keeping every activation the backward pass needs.
pub(crate) fn forward_trace<T: Scalar>(
    params: &ModelParams<T>,
    token_ids: &[usize],
    mask: &[bool],
    mut dropout: Option<&mut Dropout>,
) -> Trace<T> {
    let cfg = &params.config;
    let (len, d) = (token_ids.len(), cfg.d_model);

    let mut x = Matrix::zeros(len, d);
    for (pos, &id) in token_ids.iter().enumerate() {
        for (c, (out, &e)) in x.row_mut(pos).iter_mut().zip(params.embedding.row(id)).enumerate() {
            *out = e + sinusoidal_position::<T>(pos, c, d);
        }
    }

    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (normed, attn_norm) = layer_norm(&x, &layer.attn_norm);
        let q = affine(&normed, &layer.query.weight, &layer.query.bias);
        let k = affine(&normed, &layer.key.weight, &layer.key.bias);
        let v = affine(&normed, &layer.value.weight, &layer.value.bias);
        let (probs, context) = attention(&q, &k, &v, mask, cfg.n_heads);
        let mut attn_out = affine(&context, &layer.output.weight, &layer.output.bias);
        let attn_drop = dropout.as_deref_mut().map(|dr| dr.sample(len * d));
        apply_mask(&mut attn_out, &attn_drop);
        x.add_assign(&attn_out);

        let (ffn_input, ffn_norm) = layer_norm(&x, &layer.ffn_norm);
        let ffn_pre = affine(&ffn_input, &layer.ffn_in.weight, &layer.ffn_in.bias);
        let mut ffn_act = ffn_pre.clone();
        ffn_act.as_mut_slice().iter_mut().for_each(|v| *v = gelu(*v));
        let mut ffn_out = affine(&ffn_act, &layer.ffn_out.weight, &layer.ffn_out.bias);
        let ffn_drop = dropout.as_deref_mut().map(|dr| dr.sample(len * d));
        apply_mask(&mut ffn_out, &ffn_drop);
        x.add_assign(&ffn_out);

        layers.push(LayerTrace {
            attn_norm,
            normed,
            q,
            k,
            v,
            probs,
            context,
            attn_drop,
            ffn_norm,
            ffn_input,
            ffn_pre,
            ffn_act,
            ffn_drop,
        });
    }

    let (hidden, final_norm) = layer_norm(&x, &params.final_norm);
    let (head_inputs, head_pre) = head_forward(params, &hidden);
    Trace { layers, final_norm, hidden, head_inputs, head_pre }
}

fn head_forward<T: Scalar>(params: &ModelParams<T>, hidden: &Matrix<T>) -> (Vec<Matrix<T>>, Vec<Matrix<T>>) {
    let mut inputs = Vec::with_capacity(params.head.len());
    let mut pre = Vec::with_capacity(params.head.len());
    let mut z = hidden.clone();
    for (i, aff) in params.head.iter().enumerate() {
        let y = affine(&z, &aff.weight, &aff.bias);
        inputs.push(z);
        z = y.clone();
        if i + 1 < params.head.len() {
            z.as_mut_slice().iter_mut().for_each(|v| *v = gelu(*v));
        }
        pre.push(y);
    }
    (inputs, pre)
}

/// Contextual hidden state for every position (inference mode, no dropout).
pub fn encode<T: Scalar>(
    params: &ModelParams<T>,
    token_ids: &[usize],
    mask: &[bool],
) -> Result<EncoderOutput<T>, ModelError> {
    check_input(params, token_ids, mask)?;
    let trace = forward_trace(params, token_ids, mask, None);
    Ok(EncoderOutput { hidden: trace.hidden })
}

/// Applies the classification head to every hidden state and normalizes.
pub fn classify<T: Scalar>(
    params: &ModelParams<T>,
    hidden: &EncoderOutput<T>,
) -> Result<(Matrix<T>, ProbDistribution<T>), ModelError> {
    if hidden.hidden.cols() != params.config.d_model {
        return Err(ModelError::ShapeMismatch(format!(
            "hidden width {} but d_model {}",
            hidden.hidden.cols(),
            params.config.d_model
        )));
    }
    let (_, mut pre) = head_forward(params, &hidden.hidden);
    let logits = pre.pop().expect("head has at least one layer");
    let dist = softmax_rows(&logits);
    Ok((logits, dist))
}

/// Independent per-token argmax labels. The result is not guaranteed to be
/// a valid BIO sequence.
pub fn predict<T: Scalar>(
    params: &ModelParams<T>,
    sentence: &Sentence,
    vocab: &Vocabulary,
) -> Result<Vec<BioTag>, ModelError> {
    let ids = vocab.encode(sentence.tokens());
    let mask = vec![true; ids.len()];
    let hidden = encode(params, &ids, &mask)?;
    let (_, dist) = classify(params, &hidden)?;
    Ok(dist.argmax_all().into_iter().map(|id| BioTag::from_id(id).expect("13-way head")).collect())
}
