//! Tokenized sentences, the column text format, and BIO/span conversion.

mod bio;
mod conll;
mod tag;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bio::{repair_bio, spans_to_tags, tags_to_spans, validate_bio};
pub use conll::{parse_conll, parse_conll_located, serialize_conll, LocatedCorpus};
pub use tag::{BioTag, EntityClass, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("unknown tag {0}")]
    UnknownTag(String),
    #[error("unknown entity class {0}")]
    UnknownClass(String),
    #[error("unknown tag {tag} at line {line}")]
    UnknownTagAt { tag: String, line: usize },
    #[error("empty token at line {line}")]
    EmptyToken { line: usize },
    #[error("mixed tagged and untagged lines within one sentence at line {line}")]
    MixedAnnotation { line: usize },
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("token {index} is empty")]
    EmptyTokenAt { index: usize },
    #[error("{tags} tags for {tokens} tokens")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("invalid BIO sequence: I- tag at index {index} does not continue an entity")]
    InvalidBio { index: usize },
    #[error("span [{start}, {end}) is empty or out of range for length {len}")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("spans [{first_start}, {first_end}) and [{second_start}, {second_end}) overlap")]
    OverlappingSpans { first_start: usize, first_end: usize, second_start: usize, second_end: usize },
}

/// A contiguous entity mention: tokens `start..end` of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub class: EntityClass,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, class: EntityClass) -> Self {
        EntitySpan { start, end, class }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// One tokenized sentence, optionally carrying a tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    id: Option<String>,
    tokens: Vec<String>,
    tags: Option<Vec<BioTag>>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>, tags: Option<Vec<BioTag>>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        if let Some(index) = tokens.iter().position(|t| t.is_empty()) {
            return Err(CorpusError::EmptyTokenAt { index });
        }
        if let Some(tags) = &tags {
            if tags.len() != tokens.len() {
                return Err(CorpusError::LengthMismatch { tokens: tokens.len(), tags: tags.len() });
            }
        }
        Ok(Sentence { id: None, tokens, tags })
    }

    /// Convenience constructor for a tagged sentence from string slices.
    pub fn tagged(tokens: &[&str], tags: &[BioTag]) -> Result<Self, CorpusError> {
        Sentence::new(tokens.iter().map(|t| t.to_string()).collect(), Some(tags.to_vec()))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn set_id(&mut self, id: Option<String>) {
        self.id = id;
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn tags(&self) -> Option<&[BioTag]> {
        self.tags.as_deref()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Replaces (or removes) the tag sequence.
    pub fn set_tags(&mut self, tags: Option<Vec<BioTag>>) -> Result<(), CorpusError> {
        if let Some(t) = &tags {
            if t.len() != self.tokens.len() {
                return Err(CorpusError::LengthMismatch { tokens: self.tokens.len(), tags: t.len() });
            }
        }
        self.tags = tags;
        Ok(())
    }

    /// Entity spans of a tagged sentence; `None` when untagged.
    pub fn spans(&self) -> Option<Result<Vec<EntitySpan>, CorpusError>> {
        self.tags.as_deref().map(tags_to_spans)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Corpus { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Index of the first sentence lacking tags, if any.
    pub fn first_untagged(&self) -> Option<usize> {
        self.sentences.iter().position(|s| s.tags().is_none())
    }
}

impl FromIterator<Sentence> for Corpus {
    fn from_iter<I: IntoIterator<Item = Sentence>>(iter: I) -> Self {
        Corpus { sentences: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}
