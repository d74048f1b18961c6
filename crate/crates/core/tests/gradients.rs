//! Finite-difference verification of the analytic backward pass.
//!
//! The numerical side only uses the public inference path (`encode`,
//! `classify`, `cross_entropy`), never the backward implementation.

use nerkit::model::{backward, classify, cross_entropy, encode, init_params, Batch, ForwardMode, ModelParams};
use nerkit::ModelConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;
const TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error, so that entries whose true
/// gradient is (numerically) zero are compared absolutely.
const FLOOR: f64 = 1e-6;

fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        vocab_size: 9,
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 16,
        max_len: 8,
        seed,
        ..ModelConfig::default()
    }
}

/// Mean cross-entropy over all unmasked tokens of the batch, via inference.
fn batch_loss(params: &ModelParams<f64>, batch: &Batch) -> f64 {
    let mut total = 0.0;
    for r in 0..batch.len() {
        let hidden = encode(params, &batch.token_ids[r], &batch.mask[r]).unwrap();
        let (logits, _) = classify(params, &hidden).unwrap();
        let kept = batch.mask[r].iter().filter(|&&m| m).count();
        if kept > 0 {
            total += cross_entropy(&logits, &batch.gold[r], &batch.mask[r]).unwrap() * kept as f64;
        }
    }
    total / batch.unmasked() as f64
}

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, vocab: usize) -> Batch {
    let lens: Vec<usize> = (0..rows).map(|_| rng.gen_range(2..=6)).collect();
    let width = *lens.iter().max().unwrap();
    let mut batch = Batch { token_ids: vec![], mask: vec![], gold: vec![], sentence_indices: (0..rows).collect() };
    for &len in &lens {
        batch.token_ids.push((0..width).map(|i| if i < len { rng.gen_range(2..vocab) } else { 0 }).collect());
        batch.mask.push((0..width).map(|i| i < len).collect());
        batch.gold.push((0..width).map(|i| if i < len { rng.gen_range(0..13) } else { 0 }).collect());
    }
    batch
}

/// Perturbs the parameters so that layer-norm scales and biases are not at
/// their special initial values (which would hide some gradient paths).
fn jitter(params: &mut ModelParams<f64>, rng: &mut ChaCha8Rng) {
    for t in params.tensors_mut() {
        for v in t.as_mut_slice() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
}

fn max_relative_error(params: &ModelParams<f64>, batch: &Batch) -> (f64, String) {
    let (loss, grads) = backward(params, batch, ForwardMode::Eval).unwrap();
    assert!((loss - batch_loss(params, batch)).abs() < 1e-12);

    let analytic: Vec<(String, Vec<f64>)> =
        grads.named_tensors().into_iter().map(|(n, t)| (n, t.as_slice().to_vec())).collect();
    let mut probe = params.clone();
    let mut worst = (0.0, String::new());
    for (t_idx, (name, values)) in analytic.iter().enumerate() {
        for (i, &a) in values.iter().enumerate() {
            let original = probe.tensors_mut()[t_idx].as_slice()[i];
            probe.tensors_mut()[t_idx].as_mut_slice()[i] = original + STEP;
            let up = batch_loss(&probe, batch);
            probe.tensors_mut()[t_idx].as_mut_slice()[i] = original - STEP;
            let down = batch_loss(&probe, batch);
            probe.tensors_mut()[t_idx].as_mut_slice()[i] = original;
            let numeric = (up - down) / (2.0 * STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}] analytic={a:e} numeric={numeric:e}"));
            }
        }
    }
    worst
}

#[test]
fn analytic_gradients_match_central_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut params: ModelParams<f64> = init_params(&tiny_config(seed)).unwrap();
        jitter(&mut params, &mut rng);
        let batch = random_batch(&mut rng, 2, 9);
        let (err, at) = max_relative_error(&params, &batch);
        assert!(err < TOLERANCE, "seed {seed}: max relative error {err:e} at {at}");
    }
}

#[test]
fn deeper_head_and_two_layers_also_check_out() {
    let cfg = ModelConfig { n_layers: 2, head_depth: 2, d_ff: 8, ..tiny_config(42) };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut params: ModelParams<f64> = init_params(&cfg).unwrap();
    jitter(&mut params, &mut rng);
    let batch = random_batch(&mut rng, 3, 9);
    let (err, at) = max_relative_error(&params, &batch);
    assert!(err < TOLERANCE, "max relative error {err:e} at {at}");
}

#[test]
fn pad_embedding_row_gets_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params: ModelParams<f64> = init_params(&tiny_config(1)).unwrap();
    let mut batch = random_batch(&mut rng, 3, 9);
    // Ensure padding exists.
    batch.token_ids[0].push(0);
    batch.mask[0].push(false);
    batch.gold[0].push(0);
    let width = batch.token_ids[0].len();
    for r in 1..3 {
        while batch.token_ids[r].len() < width {
            batch.token_ids[r].push(0);
            batch.mask[r].push(false);
            batch.gold[r].push(0);
        }
    }
    let (_, grads) = backward(&params, &batch, ForwardMode::Eval).unwrap();
    assert!(grads.embedding.row(0).iter().all(|&g| g == 0.0));
    assert!(grads.embedding.row(2).iter().any(|&g| g != 0.0) || grads.embedding.row(3).iter().any(|&g| g != 0.0));
}

#[test]
fn duplicated_sentence_gives_the_single_sentence_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params: ModelParams<f64> = init_params(&tiny_config(2)).unwrap();
    let single = random_batch(&mut rng, 1, 9);
    let double = Batch {
        token_ids: vec![single.token_ids[0].clone(); 2],
        mask: vec![single.mask[0].clone(); 2],
        gold: vec![single.gold[0].clone(); 2],
        sentence_indices: vec![0, 1],
    };
    let (l1, g1) = backward(&params, &single, ForwardMode::Eval).unwrap();
    let (l2, g2) = backward(&params, &double, ForwardMode::Eval).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for ((name, a), (_, b)) in g1.named_tensors().into_iter().zip(g2.named_tensors()) {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{name}");
        }
    }
}

#[test]
fn backward_is_deterministic_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params: ModelParams<f32> = init_params(&tiny_config(9)).unwrap();
    let batch = random_batch(&mut rng, 6, 9);
    let mode = ForwardMode::Train { dropout: 0.1, seed: 77 };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| backward(&params, &batch, mode).unwrap())
    };
    let (la, ga) = run(1);
    let (lb, gb) = run(4);
    assert_eq!(la.to_bits(), lb.to_bits());
    assert_eq!(ga, gb);
}

#[test]
fn backward_rejects_bad_batches() {
    let params: ModelParams<f64> = init_params(&tiny_config(0)).unwrap();
    let empty_mask = Batch {
        token_ids: vec![vec![2, 3]],
        mask: vec![vec![false, false]],
        gold: vec![vec![0, 0]],
        sentence_indices: vec![0],
    };
    assert!(backward(&params, &empty_mask, ForwardMode::Eval).is_err());
    let bad_id = Batch {
        token_ids: vec![vec![2, 30]],
        mask: vec![vec![true, true]],
        gold: vec![vec![0, 0]],
        sentence_indices: vec![0],
    };
    assert!(backward(&params, &bad_id, ForwardMode::Eval).is_err());
}
