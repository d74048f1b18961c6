use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use nerkit::augment::{augment_corpus_with_stats, load_kb, AugmentPolicy};
use nerkit::corpus::{
    parse_conll, parse_conll_located, repair_bio, serialize_conll, validate_bio, Corpus, EntityClass,
};
use nerkit::eval::{confusion, confusion_table, score, EvalError};
use nerkit::trainer::{tag_corpus, train_with, RunConfig, TrainConfig};
use nerkit::CheckpointF32;

use crate::{AugmentArgs, EvaluateArgs, PredictArgs, Profile, TrainArgs, ValidateArgs};

/// A failure classified by exit code.
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Data(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(anyhow!("cannot read {}: {e}", path.display())))
}

fn read_corpus(path: &Path, what: &str) -> Result<Corpus, CliError> {
    let text = read_input(path)?;
    Ok(parse_conll(&text).with_context(|| format!("reading {what} {}", path.display()))?)
}

fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    Ok(fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?)
}

pub fn validate(args: &ValidateArgs) -> CmdResult {
    let text = read_input(&args.data)?;
    let located = match parse_conll_located(&text) {
        Ok(l) => l,
        Err(e) => {
            println!("{}: {e}", args.data.display());
            return Ok(ExitCode::from(1));
        }
    };
    let mut violations = 0;
    let mut repaired = Vec::with_capacity(located.corpus.len());
    for (s_idx, sentence) in located.corpus.iter().enumerate() {
        let mut fixed = sentence.clone();
        if let Some(tags) = sentence.tags() {
            for i in validate_bio(tags) {
                violations += 1;
                println!(
                    "{}: line {}: {} does not continue an entity (sentence {s_idx}, token {i})",
                    args.data.display(),
                    located.token_lines[s_idx][i],
                    tags[i]
                );
            }
            fixed.set_tags(Some(repair_bio(tags))).expect("same length");
        }
        repaired.push(fixed);
    }
    if args.repair {
        let out = args.out.as_ref().expect("clap requires --out with --repair");
        write_output(out, serialize_conll(&Corpus::new(repaired)))?;
        eprintln!("repaired {violations} tag(s), wrote {}", out.display());
        return Ok(ExitCode::SUCCESS);
    }
    Ok(if violations == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn resolve_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig {
        train: match args.profile {
            Profile::Toy => TrainConfig::toy(),
            Profile::FineTune => TrainConfig::fine_tune(),
        },
        ..RunConfig::default()
    };
    if let Some(path) = &args.config {
        let text = read_input(path)?;
        cfg.apply_text(&text).map_err(|e| CliError::Usage(anyhow!("{}: {e}", path.display())))?;
    }
    let overrides: [(&str, Option<String>); 12] = [
        ("learning_rate", args.lr.map(|v| v.to_string())),
        ("batch_size", args.batch_size.map(|v| v.to_string())),
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("dropout", args.dropout.map(|v| v.to_string())),
        ("clip_norm", args.clip_norm.clone()),
        ("d_model", args.d_model.map(|v| v.to_string())),
        ("n_layers", args.layers.map(|v| v.to_string())),
        ("n_heads", args.heads.map(|v| v.to_string())),
        ("d_ff", args.d_ff.map(|v| v.to_string())),
        ("max_len", args.max_len.map(|v| v.to_string())),
        ("head_depth", args.head_depth.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            cfg.set(key, &value).map_err(|e| CliError::Usage(e.into()))?;
        }
    }
    cfg.train.validate().map_err(|e| CliError::Usage(e.into()))?;
    cfg.model.validate().map_err(|e| CliError::Usage(e.into()))?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> CmdResult {
    let cfg = resolve_config(args)?;
    print!("# resolved config\n{}", cfg.to_text());

    let train_corpus = read_corpus(&args.train, "training corpus")?;
    let dev = args.dev.as_deref().map(|p| read_corpus(p, "dev corpus")).transpose()?;
    println!("# train sentences {}  dev sentences {}", train_corpus.len(), dev.as_ref().map_or(0, Corpus::len));

    let (ckpt, report) = train_with::<f32>(&cfg.model, &cfg.train, &train_corpus, dev.as_ref(), |r| {
        let f1 = r.dev_macro_f1.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        println!("epoch {}\tloss {:.6}\tdev_f1 {}\ttime {:.2}s", r.epoch, r.train_loss, f1, r.wall_time_secs);
    })
    .context("training")?;

    ckpt.save(&args.out).with_context(|| format!("writing checkpoint {}", args.out.display()))?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    let summary = serde_json::json!({ "config": cfg, "report": report });
    write_output(&report_path, serde_json::to_string_pretty(&summary).expect("report serializes") + "\n")?;
    println!("best epoch {}  checkpoint {}  report {}", report.best_epoch, args.out.display(), report_path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn predict(args: &PredictArgs) -> CmdResult {
    if !args.model.exists() {
        return Err(CliError::Usage(anyhow!("checkpoint {} does not exist", args.model.display())));
    }
    let ckpt =
        CheckpointF32::load(&args.model).with_context(|| format!("loading checkpoint {}", args.model.display()))?;
    let input = read_corpus(&args.input, "input corpus")?;
    let tagged = tag_corpus(&ckpt.params, &ckpt.vocab, &input, true).context("predicting")?;
    write_output(&args.output, serialize_conll(&tagged))?;
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(args: &EvaluateArgs) -> CmdResult {
    let gold = read_corpus(&args.gold, "gold corpus")?;
    let pred = read_corpus(&args.pred, "predicted corpus")?;
    let report = score(&gold, &pred, args.all_classes).map_err(|e| match e.mismatch_index() {
        Some(i) => anyhow!("corpora are misaligned at sentence {i}: {e}"),
        None => anyhow::Error::from(e),
    })?;
    if args.json {
        let mut value = serde_json::to_value(&report).expect("report serializes");
        if args.confusion {
            value["confusion"] =
                serde_json::to_value(confusion(&gold, &pred).map_err(|e: EvalError| anyhow!(e))?.to_vec())
                    .expect("matrix serializes");
        }
        println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    } else {
        print!("{}", report.to_table());
        if args.confusion {
            print!("\n{}", confusion_table(&confusion(&gold, &pred).map_err(|e| anyhow!(e))?));
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn augment(args: &AugmentArgs) -> CmdResult {
    let corpus = read_corpus(&args.data, "corpus")?;
    if let Some(i) = corpus.first_untagged() {
        return Err(anyhow!("sentence {i} of {} has no tags", args.data.display()).into());
    }
    let kb_text = read_input(&args.kb)?;
    let kb = load_kb(&kb_text).with_context(|| format!("loading knowledge base {}", args.kb.display()))?;
    let mut policy =
        AugmentPolicy { copies_per_sentence: args.copies as usize, seed: args.seed, ..AugmentPolicy::default() };
    if let Some(classes) = &args.classes {
        policy.substitutable_classes = classes
            .iter()
            .map(|c| c.trim().parse::<EntityClass>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Usage(e.into()))?;
    }
    let (augmented, stats) = augment_corpus_with_stats(&corpus, &kb, &policy).context("augmenting")?;
    let output = if args.merge {
        Corpus::new(corpus.sentences.iter().cloned().chain(augmented.sentences).collect())
    } else {
        augmented
    };
    write_output(&args.out, serialize_conll(&output))?;
    println!(
        "attempted {}  produced {}  skipped-unlinkable {}  written {}",
        stats.attempted,
        stats.produced,
        stats.skipped_unlinkable,
        output.len()
    );
    Ok(ExitCode::SUCCESS)
}
