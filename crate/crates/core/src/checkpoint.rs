//! Binary checkpoint format.
//!
//! ```text
//! "NERK"  version:u8  header_len:u32le  header:JSON  tensors:f32le...
//! ```
//!
//! The JSON header records the model config, the vocabulary, the label
//! order and every tensor's name and shape. Tensor payloads follow in
//! declaration order with no padding.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::BioTag;
use crate::model::{ModelConfig, ModelError, ModelParams};
use crate::scalar::Scalar;
use crate::vocab::Vocabulary;

pub const MAGIC: &[u8; 4] = b"NERK";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("checkpoint format version {found}, this build reads version {expected}")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: Vocabulary,
    tags: Vec<BioTag>,
    tensors: Vec<TensorInfo>,
}

/// A trained tagger: configuration, vocabulary and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub vocab: Vocabulary,
    pub params: ModelParams<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let named = self.params.named_tensors();
        let header = Header {
            config: self.params.config.clone(),
            vocab: self.vocab.clone(),
            tags: BioTag::all().to_vec(),
            tensors: named
                .iter()
                .map(|(name, t)| TensorInfo { name: name.clone(), rows: t.rows(), cols: t.cols() })
                .collect(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(9 + header.len() + 4 * self.params.param_count());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, t) in named {
            for v in t.as_slice() {
                let single = v.to_f32().expect("float to f32");
                out.extend_from_slice(&single.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 5 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch { found: bytes[4], expected: FORMAT_VERSION });
        }
        let len_bytes: [u8; 4] = bytes.get(5..9).ok_or(CheckpointError::Truncated)?.try_into().expect("4 bytes");
        let header_len = u32::from_le_bytes(len_bytes) as usize;
        let header_bytes = bytes.get(9..9 + header_len).ok_or(CheckpointError::Truncated)?;
        let header: Header = serde_json::from_slice(header_bytes)?;

        if header.tags != BioTag::all() {
            return Err(CheckpointError::Layout("label order differs from this build".into()));
        }
        if !header.vocab.is_well_formed() || header.vocab.len() != header.config.vocab_size {
            return Err(CheckpointError::Layout("vocabulary does not match config".into()));
        }
        let mut params = ModelParams::<T>::zeros(&header.config)?;
        let expected: Vec<(String, (usize, usize))> =
            params.named_tensors().into_iter().map(|(n, t)| (n, t.shape())).collect();
        if expected.len() != header.tensors.len()
            || expected
                .iter()
                .zip(&header.tensors)
                .any(|((n, s), info)| *n != info.name || *s != (info.rows, info.cols))
        {
            return Err(CheckpointError::Layout("tensor list does not match config".into()));
        }

        let mut data = &bytes[9 + header_len..];
        for tensor in params.tensors_mut() {
            let n = tensor.len();
            let chunk = data.get(..4 * n).ok_or(CheckpointError::Truncated)?;
            for (v, raw) in tensor.as_mut_slice().iter_mut().zip(chunk.chunks_exact(4)) {
                let single = f32::from_le_bytes(raw.try_into().expect("4 bytes"));
                *v = T::lit(single as f64);
            }
            data = &data[4 * n..];
        }
        if !data.is_empty() {
            return Err(CheckpointError::Layout(format!("{} trailing bytes", data.len())));
        }
        Ok(Checkpoint { vocab: header.vocab, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }
}
