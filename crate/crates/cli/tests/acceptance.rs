//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! ```text
//! cargo test -p nerkit-cli --test acceptance
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nerkit::augment::{augment_sentence_traced, load_kb, sentence_rng, AugmentPolicy};
use nerkit::corpus::{
    parse_conll, repair_bio, serialize_conll, spans_to_tags, tags_to_spans, validate_bio, BioTag, Corpus, EntityClass,
    EntitySpan, Sentence, NUM_LABELS,
};
use nerkit::eval::{f_score, score, token_accuracy, EvalReport};
use nerkit::model::{backward, classify, cross_entropy, encode, init_params, Batch, ForwardMode, Matrix, ModelParams};
use nerkit::synthetic::{filler_kb, templated_corpus};
use nerkit::trainer::{tag_corpus, train_with, TrainConfig};
use nerkit::ModelConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if let false = $cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("gradient finite-difference check", gradient_check),
        ("overfit 32 sentences with the toy profile", overfit),
        ("BIO algebra round trips", bio_algebra),
        ("evaluator matches brute-force oracle", evaluator_oracle),
        ("cross-entropy analytic values", cross_entropy_values),
        ("augmentation fidelity", augmentation_fidelity),
        ("determinism of train and augment", determinism),
        ("macro-F1 is the mean of per-class F1", macro_semantics),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- gradients

fn grad_config(seed: u64) -> ModelConfig {
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

fn inference_loss(params: &ModelParams<f64>, batch: &Batch) -> f64 {
    let mut total = 0.0;
    for r in 0..batch.len() {
        let hidden = encode(params, &batch.token_ids[r], &batch.mask[r]).unwrap();
        let (logits, _) = classify(params, &hidden).unwrap();
        let kept = batch.mask[r].iter().filter(|&&m| m).count();
        total += cross_entropy(&logits, &batch.gold[r], &batch.mask[r]).unwrap() * kept as f64;
    }
    total / batch.unmasked() as f64
}

fn gradient_check() -> Outcome {
    const STEP: f64 = 1e-4;
    const FLOOR: f64 = 1e-6;
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut lengths = BTreeSet::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut params: ModelParams<f64> = init_params(&grad_config(seed)).unwrap();
        for t in params.tensors_mut() {
            for v in t.as_mut_slice() {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
        let lens = [2 + seed as usize % 5, rng.gen_range(2..=6)];
        lengths.extend(lens);
        let width = lens[0].max(lens[1]);
        let mut batch = Batch { token_ids: vec![], mask: vec![], gold: vec![], sentence_indices: vec![0, 1] };
        for len in lens {
            batch.token_ids.push((0..width).map(|i| if i < len { rng.gen_range(2..9) } else { 0 }).collect());
            batch.mask.push((0..width).map(|i| i < len).collect());
            batch.gold.push((0..width).map(|i| if i < len { rng.gen_range(0..NUM_LABELS) } else { 0 }).collect());
        }

        let (_, grads) = backward(&params, &batch, ForwardMode::Eval).map_err(|e| e.to_string())?;
        let analytic: Vec<Vec<f64>> = grads.named_tensors().into_iter().map(|(_, t)| t.as_slice().to_vec()).collect();
        let mut probe = params.clone();
        for (t, values) in analytic.iter().enumerate() {
            for (i, &a) in values.iter().enumerate() {
                let original = probe.tensors_mut()[t].as_slice()[i];
                probe.tensors_mut()[t].as_mut_slice()[i] = original + STEP;
                let up = inference_loss(&probe, &batch);
                probe.tensors_mut()[t].as_mut_slice()[i] = original - STEP;
                let down = inference_loss(&probe, &batch);
                probe.tensors_mut()[t].as_mut_slice()[i] = original;
                let numeric = (up - down) / (2.0 * STEP);
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR));
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(worst < 1e-4, "max relative error {worst:e} >= 1e-4");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("5 seeds, lengths {lengths:?}, max relative error {worst:.2e}"))
}

// ------------------------------------------------------------------ overfit

fn overfit() -> Outcome {
    let corpus = templated_corpus(32, 2022);
    let cfg = TrainConfig { epochs: 500, ..TrainConfig::toy() };
    let started = Instant::now();
    let mut first_perfect = None;
    let (ckpt, report) = train_with::<f32>(&ModelConfig::default(), &cfg, &corpus, Some(&corpus), |r| {
        if first_perfect.is_none() && r.dev_macro_f1 == Some(1.0) {
            first_perfect = Some(r.epoch);
        }
    })
    .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let raw = tag_corpus(&ckpt.params, &ckpt.vocab, &corpus, false).map_err(|e| e.to_string())?;
    let accuracy = token_accuracy(&corpus, &raw).map_err(|e| e.to_string())?;
    let repaired = tag_corpus(&ckpt.params, &ckpt.vocab, &corpus, true).map_err(|e| e.to_string())?;
    let macro_f1 = score(&corpus, &repaired, false).map_err(|e| e.to_string())?.macro_f1;
    ensure!(report.epochs.len() <= 500, "ran {} epochs", report.epochs.len());
    ensure!(accuracy == 1.0, "token accuracy {accuracy}");
    ensure!(macro_f1 == 1.0, "macro F1 {macro_f1}");
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "token accuracy 1.0, macro F1 1.0 (first reached at epoch {}), best epoch {}",
        first_perfect.map_or("-".into(), |e| e.to_string()),
        report.best_epoch
    ))
}

// ---------------------------------------------------------------- BIO algebra

fn random_tags(rng: &mut impl Rng, len: usize) -> Vec<BioTag> {
    (0..len).map(|_| BioTag::from_id(rng.gen_range(0..NUM_LABELS)).unwrap()).collect()
}

fn random_token(rng: &mut impl Rng) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,'&-#";
    let len = rng.gen_range(1..=8);
    let mut t: String = (0..len).map(|_| CHARS[rng.gen_range(0..CHARS.len())] as char).collect();
    if t.starts_with('#') {
        t.replace_range(0..1, "x");
    }
    t
}

/// Disjoint spans built by cutting `0..n` into random segments.
fn random_spans(rng: &mut impl Rng, n: usize) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < n {
        let len = rng.gen_range(1..=3).min(n - pos);
        if rng.gen_bool(0.4) {
            spans.push(EntitySpan::new(pos, pos + len, EntityClass::ALL[rng.gen_range(0..6)]));
        }
        pos += len;
    }
    spans
}

fn bio_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checks = 0;
    for round in 0..10_000 {
        let len = rng.gen_range(0..20);
        // tags -> spans -> tags
        let tags = repair_bio(&random_tags(&mut rng, len));
        ensure!(validate_bio(&tags).is_empty(), "round {round}: repair left violations in {tags:?}");
        let spans = tags_to_spans(&tags).map_err(|e| e.to_string())?;
        ensure!(spans_to_tags(&spans, len).map_err(|e| e.to_string())? == tags, "round {round}: tags {tags:?}");
        // spans -> tags -> spans
        let spans = random_spans(&mut rng, len);
        let tags = spans_to_tags(&spans, len).map_err(|e| e.to_string())?;
        ensure!(tags_to_spans(&tags).map_err(|e| e.to_string())? == spans, "round {round}: spans {spans:?}");
        // repair idempotence
        let raw = random_tags(&mut rng, len);
        let once = repair_bio(&raw);
        ensure!(repair_bio(&once) == once, "round {round}: repair not idempotent on {raw:?}");
        // parse -> serialize -> parse
        let corpus: Corpus = (0..rng.gen_range(1..4))
            .map(|k| {
                let n = rng.gen_range(1..10);
                let tokens = (0..n).map(|_| random_token(&mut rng)).collect();
                let tags = rng.gen_bool(0.8).then(|| random_tags(&mut rng, n));
                let s = Sentence::new(tokens, tags).unwrap();
                if rng.gen_bool(0.5) {
                    s.with_id(format!("r{round}-{k}"))
                } else {
                    s
                }
            })
            .collect();
        let text = serialize_conll(&corpus);
        let back = parse_conll(&text).map_err(|e| format!("round {round}: {e}"))?;
        ensure!(back == corpus, "round {round}: parse(serialize(c)) != c");
        ensure!(serialize_conll(&back) == text, "round {round}: serialization not stable");
        checks += 1;
    }
    Ok(format!("{checks} randomized rounds, each covering all four round trips"))
}

// ----------------------------------------------------------------- evaluator

fn sentence_from_spans(spans: &[EntitySpan], len: usize) -> Sentence {
    let mut tags = vec![BioTag::O; len];
    for s in spans {
        tags[s.start] = BioTag::B(s.class);
        for t in &mut tags[s.start + 1..s.end] {
            *t = BioTag::I(s.class);
        }
    }
    Sentence::new((0..len).map(|i| format!("w{i}")).collect(), Some(tags)).unwrap()
}

/// Span sets per class, intersected directly.
fn brute_force(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>], all: bool) -> EvalReport {
    let set = |side: &[Vec<EntitySpan>], class: EntityClass| -> BTreeSet<(usize, usize, usize)> {
        side.iter()
            .enumerate()
            .flat_map(|(i, spans)| spans.iter().filter(move |s| s.class == class).map(move |s| (i, s.start, s.end)))
            .collect()
    };
    let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut per_class = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for class in EntityClass::ALL {
        let (g, p) = (set(gold, class), set(pred, class));
        let tp = g.intersection(&p).count();
        let (fp, fn_) = (p.len() - tp, g.len() - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        let (precision, recall) = (frac(tp, tp + fp), frac(tp, tp + fn_));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        per_class.push(nerkit::eval::ClassScore {
            class,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
        });
    }
    let macro_classes: Vec<EntityClass> = per_class
        .iter()
        .filter(|c| all || c.true_positives + c.false_positives + c.false_negatives > 0)
        .map(|c| c.class)
        .collect();
    let mean = |pick: &dyn Fn(&nerkit::eval::ClassScore) -> f64| {
        if macro_classes.is_empty() {
            0.0
        } else {
            macro_classes.iter().map(|c| pick(&per_class[c.index()])).sum::<f64>() / macro_classes.len() as f64
        }
    };
    let (micro_precision, micro_recall) = (frac(tp_all, tp_all + fp_all), frac(tp_all, tp_all + fn_all));
    EvalReport {
        macro_precision: mean(&|c| c.precision),
        macro_recall: mean(&|c| c.recall),
        macro_f1: mean(&|c| c.f1),
        micro_precision,
        micro_recall,
        micro_f1: if micro_precision + micro_recall == 0.0 {
            0.0
        } else {
            2.0 * micro_precision * micro_recall / (micro_precision + micro_recall)
        },
        sentences: gold.len(),
        gold_spans: tp_all + fn_all,
        predicted_spans: tp_all + fp_all,
        macro_classes,
        per_class,
    }
}

fn evaluator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..1000 {
        let n = rng.gen_range(1..6);
        let lens: Vec<usize> = (0..n).map(|_| rng.gen_range(1..12)).collect();
        let gold: Vec<Vec<EntitySpan>> = lens.iter().map(|&l| random_spans(&mut rng, l)).collect();
        let pred: Vec<Vec<EntitySpan>> = gold
            .iter()
            .zip(&lens)
            .map(|(g, &l)| if rng.gen_bool(0.3) { g.clone() } else { random_spans(&mut rng, l) })
            .collect();
        let to_corpus = |side: &[Vec<EntitySpan>]| -> Corpus {
            side.iter().zip(&lens).map(|(s, &l)| sentence_from_spans(s, l)).collect()
        };
        let (gc, pc) = (to_corpus(&gold), to_corpus(&pred));
        for all in [false, true] {
            let got = score(&gc, &pc, all).map_err(|e| e.to_string())?;
            let want = brute_force(&gold, &pred, all);
            ensure!(got == want, "round {round} (all classes {all}): scorer {got:?} oracle {want:?}");
        }
    }

    let gold = Corpus::new(vec![sentence_from_spans(
        &[EntitySpan::new(0, 1, EntityClass::Person), EntitySpan::new(2, 3, EntityClass::Location)],
        4,
    )]);
    let pred = Corpus::new(vec![sentence_from_spans(&[EntitySpan::new(0, 1, EntityClass::Person)], 4)]);
    let r = score(&gold, &pred, false).map_err(|e| e.to_string())?;
    ensure!((r.macro_f1 - 0.5).abs() < 1e-9, "hand example macro F1 {}", r.macro_f1);
    ensure!((r.micro_f1 - 2.0 / 3.0).abs() < 1e-9, "hand example micro F1 {}", r.micro_f1);
    ensure!(r.micro_precision == 1.0 && r.micro_recall == 0.5, "hand example micro P/R");
    Ok(format!("1000 random corpora equal bit-for-bit; hand example macro {:.4}, micro {:.4}", r.macro_f1, r.micro_f1))
}

// ------------------------------------------------------------ cross-entropy

fn cross_entropy_values() -> Outcome {
    let uniform = Matrix::<f64>::zeros(5, NUM_LABELS);
    let mask = [true; 5];
    let mut worst = 0.0f64;
    for gold in [[0, 1, 2, 3, 4], [12, 12, 7, 0, 5]] {
        let loss = cross_entropy(&uniform, &gold, &mask).map_err(|e| e.to_string())?;
        worst = worst.max((loss - 13f64.ln()).abs());
    }
    ensure!(worst <= 1e-9, "uniform loss off by {worst:e}");

    let gold = [3, 0, 12];
    let mut perfect = Matrix::<f64>::zeros(3, NUM_LABELS);
    for (r, &g) in gold.iter().enumerate() {
        perfect.set(r, g, 1e3);
    }
    let loss = cross_entropy(&perfect, &gold, &[true; 3]).map_err(|e| e.to_string())?;
    ensure!(loss == 0.0, "perfect prediction loss {loss:e}");
    Ok(format!("uniform = ln 13 within {worst:.1e}; perfect = 0"))
}

// -------------------------------------------------------------- augmentation

fn class_multiset(spans: &[EntitySpan]) -> BTreeMap<EntityClass, usize> {
    let mut m = BTreeMap::new();
    for s in spans {
        *m.entry(s.class).or_insert(0) += 1;
    }
    m
}

fn outside_tokens(s: &Sentence) -> Vec<String> {
    s.tokens().iter().zip(s.tags().unwrap()).filter(|(_, t)| **t == BioTag::O).map(|(w, _)| w.clone()).collect()
}

fn random_linked_sentence(rng: &mut impl Rng, names: &[(String, EntityClass)]) -> Sentence {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let pieces = rng.gen_range(1..6);
    for _ in 0..pieces {
        if rng.gen_bool(0.5) {
            let (name, class) = names.choose(rng).unwrap();
            for (k, w) in name.split(' ').enumerate() {
                tokens.push(if rng.gen_bool(0.2) { w.to_uppercase() } else { w.to_string() });
                tags.push(if k == 0 { BioTag::B(*class) } else { BioTag::I(*class) });
            }
        } else {
            for _ in 0..rng.gen_range(1..4) {
                tokens.push(random_token(rng));
                tags.push(BioTag::O);
            }
        }
    }
    if !tags.iter().any(|t| *t != BioTag::O) {
        let (name, class) = &names[0];
        for (k, w) in name.split(' ').enumerate() {
            tokens.push(w.to_string());
            tags.push(if k == 0 { BioTag::B(*class) } else { BioTag::I(*class) });
        }
    }
    Sentence::new(tokens, Some(tags)).unwrap()
}

fn augmentation_fidelity() -> Outcome {
    let input = "The\tO\nmain\tO\ncontractor\tO\nwas\tO\nSsangyong\tB-CORP\nEngineering\tI-CORP\nand\tI-CORP\n\
                 Construction\tI-CORP\n.\tO\n";
    let kb = load_kb("Q1\tSsangyong Engineering and Construction\tcorporation\t\nQ2\tYazd Tire\tcorporation\t\n")
        .map_err(|e| e.to_string())?;
    let corpus = parse_conll(input).map_err(|e| e.to_string())?;
    let out = nerkit::augment::augment_corpus(&corpus, &kb, &AugmentPolicy::default()).map_err(|e| e.to_string())?;
    ensure!(out.len() == 1, "expected one augmented sentence, got {}", out.len());
    let s = &out.sentences[0];
    ensure!(s.tokens().join(" ") == "The main contractor was Yazd Tire .", "got {:?}", s.tokens().join(" "));
    let tags: Vec<String> = s.tags().unwrap().iter().map(|t| t.to_string()).collect();
    ensure!(tags.join(" ") == "O O O O B-CORP I-CORP O", "got tags {}", tags.join(" "));

    let kb = load_kb(&filler_kb(9)).map_err(|e| e.to_string())?;
    let names: Vec<(String, EntityClass)> = templated_corpus(200, 4)
        .iter()
        .flat_map(|s| {
            s.spans().unwrap().unwrap().into_iter().map(move |sp| (s.tokens()[sp.start..sp.end].join(" "), sp.class))
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let policy = AugmentPolicy::default();
    let mut produced = 0;
    let mut index = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    while produced < 1000 {
        let original = random_linked_sentence(&mut rng, &names);
        let mut srng = sentence_rng(11, index);
        index += 1;
        let Some(sub) = augment_sentence_traced(&original, &kb, &mut srng, &policy) else { continue };
        let aug = &sub.sentence;
        let tags = aug.tags().unwrap();
        ensure!(validate_bio(tags).is_empty(), "invalid BIO in {aug:?}");
        let (before, after) = (original.spans().unwrap().unwrap(), aug.spans().unwrap().unwrap());
        ensure!(before.len() == after.len(), "span count changed: {original:?} -> {aug:?}");
        ensure!(class_multiset(&before) == class_multiset(&after), "classes changed: {original:?} -> {aug:?}");
        ensure!(outside_tokens(&original) == outside_tokens(aug), "O tokens changed: {original:?} -> {aug:?}");
        ensure!(sub.replacement_id != sub.original_id, "entity replaced by itself");
        produced += 1;
    }
    Ok(format!("worked example reproduced; {produced} randomized augmentations valid ({index} sentences tried)"))
}

// ---------------------------------------------------------------- determinism

fn run(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_nerkit"))
        .args(args)
        .env("NERKIT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "nerkit {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    std::fs::write(p("train.conll"), serialize_conll(&templated_corpus(32, 8))).map_err(|e| e.to_string())?;
    std::fs::write(p("dev.conll"), serialize_conll(&templated_corpus(8, 9))).map_err(|e| e.to_string())?;
    std::fs::write(p("kb.tsv"), filler_kb(3)).map_err(|e| e.to_string())?;
    let s = |name: &str| p(name).to_string_lossy().into_owned();

    for (out, threads) in [("a.ckpt", "1"), ("b.ckpt", "4")] {
        run(
            &[
                "train",
                "--train",
                &s("train.conll"),
                "--dev",
                &s("dev.conll"),
                "--out",
                &s(out),
                "--epochs",
                "4",
                "--seed",
                "13",
            ],
            threads,
        )?;
    }
    let (a, b) = (read(&p("a.ckpt"))?, read(&p("b.ckpt"))?);
    ensure!(a == b, "checkpoints differ ({} vs {} bytes)", a.len(), b.len());

    for (out, threads) in [("a.conll", "1"), ("b.conll", "4")] {
        run(
            &[
                "augment",
                "--data",
                &s("train.conll"),
                "--kb",
                &s("kb.tsv"),
                "--out",
                &s(out),
                "--seed",
                "21",
                "--copies",
                "2",
            ],
            threads,
        )?;
    }
    let (x, y) = (read(&p("a.conll"))?, read(&p("b.conll"))?);
    ensure!(x == y, "augment outputs differ");
    ensure!(!x.is_empty(), "augment output is empty");
    Ok(format!(
        "checkpoints identical ({} bytes), augment outputs identical ({} bytes), 1 vs 4 threads",
        a.len(),
        x.len()
    ))
}

// -------------------------------------------------------------- macro F1

fn macro_semantics() -> Outcome {
    let harmonic = f_score(86.47, 89.49);
    ensure!((harmonic - 87.95).abs() < 0.005, "2PR/(P+R) = {harmonic}");
    ensure!((harmonic - 87.91).abs() > 0.03, "2PR/(P+R) = {harmonic} is indistinguishable from 87.91");

    // PER: P 1, R 1/3. LOC: P 1/3, R 1. Mean F1 is 0.5; F1 of the mean P/R is 2/3.
    let w = |spans: &[(usize, EntityClass)]| {
        sentence_from_spans(&spans.iter().map(|&(i, c)| EntitySpan::new(i, i + 1, c)).collect::<Vec<_>>(), 6)
    };
    use EntityClass::{Location as L, Person as P};
    let gold = Corpus::new(vec![w(&[(0, P), (1, P), (2, P), (3, L)])]);
    let pred = Corpus::new(vec![w(&[(0, P), (3, L), (4, L), (5, L)])]);
    let r = score(&gold, &pred, false).map_err(|e| e.to_string())?;
    let of_means = f_score(r.macro_precision, r.macro_recall);
    ensure!((r.macro_f1 - 0.5).abs() < 1e-12, "macro F1 {}", r.macro_f1);
    ensure!((of_means - 2.0 / 3.0).abs() < 1e-12, "F1 of macro P/R {of_means}");
    Ok(format!("2PR/(P+R) = {harmonic:.2} for P 86.47, R 89.49; macro F1 averages per-class F1"))
}
