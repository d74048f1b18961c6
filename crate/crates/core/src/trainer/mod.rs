//! Mini-batch Adam training with per-epoch development scoring.
//!
//! Everything random (initialization, shuffling, dropout) is derived from the
//! configured seeds, and gradient accumulation has a fixed order, so two runs
//! with the same inputs produce bit-identical parameters.

mod config;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{RunConfig, TrainConfig};

use crate::checkpoint::Checkpoint;
use crate::corpus::{repair_bio, Corpus, CorpusError};
use crate::eval::{score, EvalError};
use crate::model::{backward, init_params, predict, Batch, ForwardMode, ModelConfig, ModelError, ModelParams};
use crate::scalar::Scalar;
use crate::vocab::{Vocabulary, PAD_ID};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sentence {index} has no tags")]
    Untagged { index: usize },
    #[error("sentence {index} has {len} tokens, more than max_len {max_len}")]
    TooLong { index: usize, len: usize, max_len: usize },
    #[error("non-finite gradient in {tensor}")]
    NonFiniteGradient { tensor: String },
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_trainable(corpus: &Corpus, max_len: usize) -> Result<(), TrainError> {
    for (index, s) in corpus.iter().enumerate() {
        if s.tags().is_none() {
            return Err(TrainError::Untagged { index });
        }
        if s.len() > max_len {
            return Err(TrainError::TooLong { index, len: s.len(), max_len });
        }
    }
    Ok(())
}

/// Shuffles sentences with `seed` and packs them into padded batches of at
/// most `batch_size` rows. Each sentence appears exactly once.
pub fn make_batches(
    corpus: &Corpus,
    vocab: &Vocabulary,
    batch_size: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<Batch>, TrainError> {
    if batch_size == 0 {
        return Err(TrainError::InvalidConfig("batch_size must be at least 1".into()));
    }
    check_trainable(corpus, max_len)?;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let batches = order
        .chunks(batch_size)
        .map(|chunk| {
            let width = chunk.iter().map(|&i| corpus.sentences[i].len()).max().unwrap_or(0);
            let mut batch = Batch { token_ids: vec![], mask: vec![], gold: vec![], sentence_indices: chunk.to_vec() };
            for &i in chunk {
                let sentence = &corpus.sentences[i];
                let pad = width - sentence.len();
                let mut ids = vocab.encode(sentence.tokens());
                ids.extend(std::iter::repeat_n(PAD_ID, pad));
                let mut gold: Vec<usize> = sentence.tags().expect("checked").iter().map(|t| t.id()).collect();
                gold.extend(std::iter::repeat_n(0, pad));
                let mut mask = vec![true; sentence.len()];
                mask.extend(std::iter::repeat_n(false, pad));
                batch.token_ids.push(ids);
                batch.gold.push(gold);
                batch.mask.push(mask);
            }
            batch
        })
        .collect();
    Ok(batches)
}

/// First and second moment estimates, laid out like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        AdamState { step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }
}

/// Bias-corrected Adam update of one tensor at 1-based `step`.
pub fn adam_update<T: Scalar>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], step: u64, cfg: &TrainConfig) {
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let correct1 = T::lit(1.0 - cfg.beta1.powf(step as f64));
    let correct2 = T::lit(1.0 - cfg.beta2.powf(step as f64));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / correct1;
        let v_hat = *v / correct2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One optimizer step. Gradients are clipped to `clip_norm` (global L2 norm)
/// before the moments are updated.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    if let Some(tensor) = grads.first_non_finite() {
        return Err(TrainError::NonFiniteGradient { tensor });
    }
    let mut clipped;
    let mut grads = grads;
    if let Some(max_norm) = cfg.clip_norm {
        let norm = grads.global_norm().as_f64();
        if norm > max_norm {
            clipped = grads.clone();
            clipped.scale(T::lit(max_norm / norm));
            grads = &clipped;
        }
    }
    state.step += 1;
    let g_all = grads.named_tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, (_, g)), m), v) in params.tensors_mut().into_iter().zip(g_all).zip(ms).zip(vs) {
        adam_update(p.as_mut_slice(), g.as_slice(), m.as_mut_slice(), v.as_mut_slice(), state.step, cfg);
    }
    Ok(())
}

/// Tags every sentence (in parallel, order preserved). With `repair` the
/// predictions are made BIO-valid.
pub fn tag_corpus<T: Scalar>(
    params: &ModelParams<T>,
    vocab: &Vocabulary,
    corpus: &Corpus,
    repair: bool,
) -> Result<Corpus, ModelError> {
    let tagged: Result<Vec<_>, ModelError> = corpus
        .sentences
        .par_iter()
        .map(|s| {
            let tags = predict(params, s, vocab)?;
            let tags = if repair { repair_bio(&tags) } else { tags };
            let mut out = s.clone();
            out.set_tags(Some(tags)).expect("one tag per token");
            Ok(out)
        })
        .collect();
    Ok(Corpus::new(tagged?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Token-weighted mean training loss over the epoch's batches.
    pub train_loss: f64,
    pub dev_macro_f1: Option<f64>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were kept: highest dev macro F1,
    /// earliest on ties, or the last epoch without a dev set.
    pub best_epoch: usize,
}

impl TrainReport {
    /// Equality ignoring wall-clock timings.
    pub fn same_outcome(&self, other: &TrainReport) -> bool {
        self.best_epoch == other.best_epoch
            && self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.train_loss.to_bits() == b.train_loss.to_bits()
                    && a.dev_macro_f1.map(f64::to_bits) == b.dev_macro_f1.map(f64::to_bits)
            })
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }
}

pub fn train<T: Scalar>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    train_corpus: &Corpus,
    dev: Option<&Corpus>,
) -> Result<(Checkpoint<T>, TrainReport), TrainError> {
    train_with(model, cfg, train_corpus, dev, |_| {})
}

/// Like [`train`], calling `on_epoch` after every epoch.
pub fn train_with<T: Scalar>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    train_corpus: &Corpus,
    dev: Option<&Corpus>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Checkpoint<T>, TrainReport), TrainError> {
    cfg.validate()?;
    if train_corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    check_trainable(train_corpus, model.max_len)?;
    if let Some(dev) = dev {
        check_trainable(dev, model.max_len)?;
    }

    let vocab = Vocabulary::build(train_corpus);
    let model = ModelConfig { vocab_size: vocab.len(), ..model.clone() };
    let mut params: ModelParams<T> = init_params(&model)?;
    let mut state = AdamState::new(&params);
    let mut best: Option<(usize, f64, ModelParams<T>)> = None;
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let batches = make_batches(train_corpus, &vocab, cfg.batch_size, model.max_len, mix(cfg.seed, epoch as u64))?;
        let mut loss_sum = 0.0;
        let mut tokens = 0usize;
        for batch in &batches {
            let mode = ForwardMode::Train { dropout: cfg.dropout, seed: mix(cfg.seed ^ 0xD50F, state.step + 1) };
            let (loss, grads) = backward(&params, batch, mode)?;
            adam_step(&mut params, &grads, &mut state, cfg)?;
            let n = batch.unmasked();
            loss_sum += loss.as_f64() * n as f64;
            tokens += n;
        }

        let dev_macro_f1 = match dev {
            Some(dev) => {
                let predicted = tag_corpus(&params, &vocab, dev, true)?;
                Some(score(dev, &predicted, false)?.macro_f1)
            }
            None => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / tokens as f64,
            dev_macro_f1,
            wall_time_secs: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        records.push(record);

        let metric = dev_macro_f1.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((_, best_metric, _)) => dev.is_none() || metric > *best_metric,
        };
        if improved {
            best = Some((epoch, metric, params.clone()));
        }
    }

    let (best_epoch, _, best_params) = best.expect("at least one epoch");
    Ok((Checkpoint { vocab, params: best_params }, TrainReport { epochs: records, best_epoch }))
}
