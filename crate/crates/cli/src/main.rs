//! `nerkit` command-line tool.
//!
//! Exit codes: 0 success, 1 data or pipeline error, 2 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "nerkit", version, about = "Complex named entity recognition toolkit")]
struct Cli {
    /// Worker threads for parallel sections. Results never depend on it.
    #[arg(long, global = true, env = "NERKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file for format and BIO errors.
    Validate(ValidateArgs),
    /// Train a tagger and write a checkpoint.
    Train(Box<TrainArgs>),
    /// Tag a corpus with a trained checkpoint.
    Predict(PredictArgs),
    /// Score predicted tags against gold tags.
    Evaluate(EvaluateArgs),
    /// Generate new training sentences by entity substitution.
    Augment(AugmentArgs),
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Rewrite dangling I- tags to B- and write the result to --out.
    #[arg(long, requires = "out")]
    pub repair: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Profile {
    /// lr 1e-3, batch 32, 50 epochs: suited to the from-scratch encoder.
    Toy,
    /// lr 2e-5, batch 32, 10 epochs: the pretrained fine-tuning setting.
    FineTune,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary path (default: checkpoint path with `.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "toy")]
    pub profile: Profile,
    /// Flat `key = value` config file, applied after the profile.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Gradient clipping norm, or `none`.
    #[arg(long)]
    pub clip_norm: Option<String>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub head_depth: Option<usize>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Emit the full report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Average macro scores over all six classes, even absent ones.
    #[arg(long)]
    pub all_classes: bool,
    /// Also print the token-level confusion matrix.
    #[arg(long)]
    pub confusion: bool,
}

#[derive(Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub kb: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub copies: u64,
    /// Write the original sentences followed by the augmented ones.
    #[arg(long)]
    pub merge: bool,
    /// Comma-separated classes eligible for substitution (default: all).
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Augment(a) => commands::augment(&a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}
