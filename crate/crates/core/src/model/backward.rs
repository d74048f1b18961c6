//! Hand-derived gradients of the mean token cross-entropy.
//!
//! Every sentence of a batch is differentiated independently (optionally on
//! several threads) and the per-sentence gradients are then summed in batch
//! order, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::forward::{check_input, forward_trace, Dropout, NormTrace, Trace};
use super::loss::{softmax_rows, token_nll};
use super::params::{LayerNormParams, ModelParams};
use super::tensor::{affine_backward, apply_mask, gelu_grad, Matrix};
use super::ModelError;
use crate::scalar::Scalar;

/// Padded mini-batch. Rows share one length; `mask[r][i]` is false on padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub token_ids: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
    pub gold: Vec<Vec<usize>>,
    /// Position of each row's sentence in the source corpus.
    pub sentence_indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn unmasked(&self) -> usize {
        self.mask.iter().flatten().filter(|&&m| m).count()
    }
}

/// Whether dropout is active. `Eval` gives an exact, deterministic function
/// of the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardMode {
    Eval,
    Train { dropout: f64, seed: u64 },
}

/// Loss and gradients for one batch, averaged over all unmasked tokens.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    batch: &Batch,
    mode: ForwardMode,
) -> Result<(T, ModelParams<T>), ModelError> {
    if batch.mask.len() != batch.len() || batch.gold.len() != batch.len() {
        return Err(ModelError::ShapeMismatch("batch rows disagree".into()));
    }
    for r in 0..batch.len() {
        check_input(params, &batch.token_ids[r], &batch.mask[r])?;
        if batch.gold[r].len() != batch.token_ids[r].len() {
            return Err(ModelError::ShapeMismatch(format!("row {r}: gold length differs from token length")));
        }
        for (&g, &m) in batch.gold[r].iter().zip(&batch.mask[r]) {
            if m && g >= params.config.n_labels {
                return Err(ModelError::LabelOutOfRange { label: g, n_labels: params.config.n_labels });
            }
        }
    }
    let count = batch.unmasked();
    if count == 0 {
        return Err(ModelError::NoUnmaskedPositions);
    }
    let weight = T::one() / T::lit(count as f64);

    let per_row: Vec<(T, ModelParams<T>)> = (0..batch.len())
        .into_par_iter()
        .map(|r| {
            let mut dropout = match mode {
                ForwardMode::Eval => None,
                ForwardMode::Train { dropout: 0.0, .. } => None,
                ForwardMode::Train { dropout, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r as u64);
                    Some(Dropout { rate: dropout, rng })
                }
            };
            row_backward(params, &batch.token_ids[r], &batch.mask[r], &batch.gold[r], weight, dropout.as_mut())
        })
        .collect();

    let mut loss = T::zero();
    let mut grads = params.zeros_like();
    for (row_loss, row_grads) in &per_row {
        loss += *row_loss;
        grads.accumulate(row_grads);
    }
    if !loss.is_finite() {
        return Err(ModelError::NonFinite { tensor: "loss".into() });
    }
    if let Some(tensor) = grads.first_non_finite() {
        return Err(ModelError::NonFinite { tensor: format!("grad.{tensor}") });
    }
    Ok((loss, grads))
}

fn row_backward<T: Scalar>(
    params: &ModelParams<T>,
    ids: &[usize],
    mask: &[bool],
    gold: &[usize],
    weight: T,
    dropout: Option<&mut Dropout>,
) -> (T, ModelParams<T>) {
    let trace = forward_trace(params, ids, mask, dropout);
    let mut grads = params.zeros_like();
    let logits = trace.logits();

    let mut loss = T::zero();
    let mut dlogits = softmax_rows(logits).probs;
    for i in 0..ids.len() {
        let row = dlogits.row_mut(i);
        if mask[i] {
            loss += token_nll(logits.row(i), gold[i]) * weight;
            row[gold[i]] -= T::one();
            row.iter_mut().for_each(|v| *v *= weight);
        } else {
            row.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    let dhidden = head_backward(params, &trace, dlogits, &mut grads);
    let mut dx = norm_backward(&trace.final_norm, &params.final_norm, &dhidden, &mut grads.final_norm);

    for (l, layer) in params.layers.iter().enumerate().rev() {
        let t = &trace.layers[l];
        let g = &mut grads.layers[l];

        // Feedforward sublayer.
        let mut dffn_out = dx.clone();
        apply_mask(&mut dffn_out, &t.ffn_drop);
        let mut dact =
            affine_backward(&t.ffn_act, &layer.ffn_out.weight, &dffn_out, &mut g.ffn_out.weight, &mut g.ffn_out.bias);
        for (d, &pre) in dact.as_mut_slice().iter_mut().zip(t.ffn_pre.as_slice()) {
            *d *= gelu_grad(pre);
        }
        let dffn_in =
            affine_backward(&t.ffn_input, &layer.ffn_in.weight, &dact, &mut g.ffn_in.weight, &mut g.ffn_in.bias);
        dx.add_assign(&norm_backward(&t.ffn_norm, &layer.ffn_norm, &dffn_in, &mut g.ffn_norm));

        // Attention sublayer.
        let mut dattn_out = dx.clone();
        apply_mask(&mut dattn_out, &t.attn_drop);
        let dcontext =
            affine_backward(&t.context, &layer.output.weight, &dattn_out, &mut g.output.weight, &mut g.output.bias);
        let (dq, dk, dv) = attention_backward(&t.q, &t.k, &t.v, &t.probs, &dcontext, params.config.n_heads);
        let mut dnormed = affine_backward(&t.normed, &layer.query.weight, &dq, &mut g.query.weight, &mut g.query.bias);
        dnormed.add_assign(&affine_backward(&t.normed, &layer.key.weight, &dk, &mut g.key.weight, &mut g.key.bias));
        dnormed.add_assign(&affine_backward(
            &t.normed,
            &layer.value.weight,
            &dv,
            &mut g.value.weight,
            &mut g.value.bias,
        ));
        dx.add_assign(&norm_backward(&t.attn_norm, &layer.attn_norm, &dnormed, &mut g.attn_norm));
    }

    for (pos, &id) in ids.iter().enumerate() {
        for (e, &d) in grads.embedding.row_mut(id).iter_mut().zip(dx.row(pos)) {
            *e += d;
        }
    }
    (loss, grads)
}

fn head_backward<T: Scalar>(
    params: &ModelParams<T>,
    trace: &Trace<T>,
    dlogits: Matrix<T>,
    grads: &mut ModelParams<T>,
) -> Matrix<T> {
    let mut dy = dlogits;
    for i in (0..params.head.len()).rev() {
        let aff = &params.head[i];
        let g = &mut grads.head[i];
        let mut dz = affine_backward(&trace.head_inputs[i], &aff.weight, &dy, &mut g.weight, &mut g.bias);
        if i > 0 {
            for (d, &pre) in dz.as_mut_slice().iter_mut().zip(trace.head_pre[i - 1].as_slice()) {
                *d *= gelu_grad(pre);
            }
        }
        dy = dz;
    }
    dy
}

fn norm_backward<T: Scalar>(
    trace: &NormTrace<T>,
    p: &LayerNormParams<T>,
    dy: &Matrix<T>,
    g: &mut LayerNormParams<T>,
) -> Matrix<T> {
    let (rows, cols) = dy.shape();
    let n = T::lit(cols as f64);
    let mut dx = Matrix::zeros(rows, cols);
    let mut dxhat = vec![T::zero(); cols];
    for r in 0..rows {
        let xhat = trace.xhat.row(r);
        let dyr = dy.row(r);
        let mut mean_d = T::zero();
        let mut mean_dx = T::zero();
        for c in 0..cols {
            let gm = g.gamma.get(0, c) + dyr[c] * xhat[c];
            g.gamma.set(0, c, gm);
            let bt = g.beta.get(0, c) + dyr[c];
            g.beta.set(0, c, bt);
            dxhat[c] = dyr[c] * p.gamma.get(0, c);
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xhat[c];
        }
        mean_d /= n;
        mean_dx /= n;
        let inv = trace.inv_std[r];
        for c in 0..cols {
            dx.set(r, c, inv * (dxhat[c] - mean_d - xhat[c] * mean_dx));
        }
    }
    dx
}

fn attention_backward<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    probs: &[Matrix<T>],
    dcontext: &Matrix<T>,
    n_heads: usize,
) -> (Matrix<T>, Matrix<T>, Matrix<T>) {
    let (len, d) = q.shape();
    let dh = d / n_heads;
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let mut dq = Matrix::zeros(len, d);
    let mut dk = Matrix::zeros(len, d);
    let mut dv = Matrix::zeros(len, d);
    let mut dprobs = vec![T::zero(); len];
    for (h, p) in probs.iter().enumerate() {
        let cols = h * dh..(h + 1) * dh;
        for i in 0..len {
            let dci = &dcontext.row(i)[cols.clone()];
            let mut weighted = T::zero();
            for j in 0..len {
                let pij = p.get(i, j);
                let vj = &v.row(j)[cols.clone()];
                dprobs[j] = dci.iter().zip(vj).map(|(&a, &b)| a * b).sum();
                weighted += pij * dprobs[j];
                if pij != T::zero() {
                    for (c, &g) in cols.clone().zip(dci) {
                        dv.set(j, c, dv.get(j, c) + pij * g);
                    }
                }
            }
            for j in 0..len {
                let pij = p.get(i, j);
                if pij == T::zero() {
                    continue;
                }
                let ds = pij * (dprobs[j] - weighted) * scale;
                for c in cols.clone() {
                    dq.set(i, c, dq.get(i, c) + ds * k.get(j, c));
                    dk.set(j, c, dk.get(j, c) + ds * q.get(i, c));
                }
            }
        }
    }
    (dq, dk, dv)
}
