//! Complex named entity recognition toolkit.
//!
//! The pipeline covers reading and writing BIO-tagged column corpora, a
//! small transformer token tagger trained from scratch, knowledge-base driven
//! entity-substitution augmentation, and span-level precision/recall/F1.
//!
//! Network math is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used for training/inference (`f32`, matching the
//! checkpoint encoding) and for numerical verification (`f64`).

pub mod augment;
pub mod checkpoint;
pub mod corpus;
pub mod eval;
pub mod model;
pub mod scalar;
pub mod synthetic;
pub mod trainer;
pub mod vocab;

pub use augment::{AugmentPolicy, KnowledgeBase};
pub use checkpoint::Checkpoint;
pub use corpus::{BioTag, Corpus, CorpusError, EntityClass, EntitySpan, Sentence};
pub use eval::EvalReport;
pub use model::{ModelConfig, ModelError};
pub use scalar::Scalar;
pub use trainer::{RunConfig, TrainConfig, TrainReport};
pub use vocab::Vocabulary;

/// Single-precision parameters, as stored in checkpoints.
pub type ModelParamsF32 = model::ModelParams<f32>;
/// Double-precision parameters, for gradient checks and analysis.
pub type ModelParamsF64 = model::ModelParams<f64>;
/// Single-precision checkpoint used by the command-line tools.
pub type CheckpointF32 = Checkpoint<f32>;
pub type CheckpointF64 = Checkpoint<f64>;
