//! Entity-substitution augmentation.
//!
//! Each entity mention of a training sentence is linked against a local
//! gazetteer by exact normalized surface form. A linked mention can be
//! swapped for the canonical name of another entity of the same type, and
//! the BIO tags are rebuilt around the new mention.
//!
//! Knowledge-base files are tab separated, one entity per line:
//!
//! ```text
//! # id   canonical name                           type         aliases
//! Q1     Ssangyong Engineering and Construction   corporation  Ssangyong E&C|SsangYong
//! Q2     Yazd Tire                                corporation
//! ```

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{spans_to_tags, tags_to_spans, Corpus, EntityClass, EntitySpan, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("duplicate entity id {id} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("malformed knowledge base line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown entity id {0}")]
    UnknownEntity(String),
    #[error("sentence has no tags")]
    Untagged,
    #[error("span [{start}, {end}) is not an entity of the sentence")]
    SpanNotAligned { start: usize, end: usize },
    #[error("replacement mention is empty")]
    EmptyReplacement,
    #[error("copies_per_sentence must be at least 1")]
    NoCopies,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntity {
    pub id: String,
    pub canonical_name: Vec<String>,
    pub entity_type: String,
    pub aliases: Vec<Vec<String>>,
}

/// Lowercased, single-space-joined form used as the surface index key.
pub fn normalize_surface<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(|t| t.as_ref().to_lowercase()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entities: BTreeMap<String, KbEntity>,
    surface_index: BTreeMap<String, BTreeSet<String>>,
    type_index: BTreeMap<String, BTreeSet<String>>,
}

impl KnowledgeBase {
    /// Builds both indexes from the entity records. Ids must be unique.
    pub fn from_entities(entities: impl IntoIterator<Item = KbEntity>) -> Result<Self, AugmentError> {
        let mut kb = KnowledgeBase::default();
        for (i, entity) in entities.into_iter().enumerate() {
            kb.insert(entity, i + 1)?;
        }
        Ok(kb)
    }

    fn insert(&mut self, entity: KbEntity, line: usize) -> Result<(), AugmentError> {
        if self.entities.contains_key(&entity.id) {
            return Err(AugmentError::DuplicateId { id: entity.id, line });
        }
        for surface in std::iter::once(&entity.canonical_name).chain(&entity.aliases) {
            self.surface_index.entry(normalize_surface(surface)).or_default().insert(entity.id.clone());
        }
        self.type_index.entry(entity.entity_type.clone()).or_default().insert(entity.id.clone());
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&KbEntity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &KbEntity> {
        self.entities.values()
    }

    pub fn surface_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.surface_index
    }

    pub fn type_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.type_index
    }

    /// Fresh knowledge base built from this one's entity records alone.
    pub fn rebuilt(&self) -> KnowledgeBase {
        KnowledgeBase::from_entities(self.entities.values().cloned()).expect("ids already unique")
    }
}

/// Parses the tab-separated knowledge-base format.
pub fn load_kb(text: &str) -> Result<KnowledgeBase, AugmentError> {
    let mut kb = KnowledgeBase::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| AugmentError::Malformed { line, reason: reason.to_string() };
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(malformed(&format!("expected 3 or 4 tab-separated fields, found {}", fields.len())));
        }
        let id = fields[0].trim();
        let canonical_name: Vec<String> = fields[1].split_whitespace().map(String::from).collect();
        let entity_type = fields[2].trim();
        if id.is_empty() {
            return Err(malformed("empty id"));
        }
        if canonical_name.is_empty() {
            return Err(malformed("empty canonical name"));
        }
        if entity_type.is_empty() {
            return Err(malformed("empty entity type"));
        }
        let aliases = fields
            .get(3)
            .map(|a| {
                a.split('|')
                    .map(|alias| alias.split_whitespace().map(String::from).collect::<Vec<_>>())
                    .filter(|alias| !alias.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        kb.insert(
            KbEntity { id: id.to_string(), canonical_name, entity_type: entity_type.to_string(), aliases },
            line,
        )?;
    }
    Ok(kb)
}

/// Exact surface-form lookup. Several matches resolve to the smallest id.
pub fn link<S: AsRef<str>>(mention: &[S], kb: &KnowledgeBase) -> Option<String> {
    kb.surface_index.get(&normalize_surface(mention)).and_then(|ids| ids.iter().next().cloned())
}

/// Other entities of the same type, sorted by id.
pub fn same_type_candidates(entity_id: &str, kb: &KnowledgeBase) -> Result<Vec<String>, AugmentError> {
    let entity = kb.get(entity_id).ok_or_else(|| AugmentError::UnknownEntity(entity_id.to_string()))?;
    Ok(kb.type_index[&entity.entity_type].iter().filter(|id| *id != entity_id).cloned().collect())
}

/// Replaces the mention at `span` and rebuilds the tags: the new mention is
/// `B-X I-X ...` of the span's class and later spans shift by the length
/// difference.
pub fn substitute(sentence: &Sentence, span: EntitySpan, replacement: &[String]) -> Result<Sentence, AugmentError> {
    let tags = sentence.tags().ok_or(AugmentError::Untagged)?;
    let spans = tags_to_spans(tags).map_err(|_| AugmentError::SpanNotAligned { start: span.start, end: span.end })?;
    if !spans.contains(&span) {
        return Err(AugmentError::SpanNotAligned { start: span.start, end: span.end });
    }
    if replacement.is_empty() || replacement.iter().any(String::is_empty) {
        return Err(AugmentError::EmptyReplacement);
    }

    let tokens = sentence.tokens();
    let mut new_tokens = Vec::with_capacity(tokens.len() - span.len() + replacement.len());
    new_tokens.extend_from_slice(&tokens[..span.start]);
    new_tokens.extend_from_slice(replacement);
    new_tokens.extend_from_slice(&tokens[span.end..]);

    let new_len = replacement.len();
    let new_spans: Vec<EntitySpan> = spans
        .iter()
        .map(|s| {
            if s.start < span.start {
                *s
            } else if *s == span {
                EntitySpan::new(span.start, span.start + new_len, span.class)
            } else {
                EntitySpan::new(s.start - span.len() + new_len, s.end - span.len() + new_len, s.class)
            }
        })
        .collect();
    let new_tags = spans_to_tags(&new_spans, new_tokens.len()).expect("shifted spans stay disjoint");
    let mut out = Sentence::new(new_tokens, Some(new_tags)).expect("non-empty tokens");
    out.set_id(sentence.id().map(String::from));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub copies_per_sentence: usize,
    pub seed: u64,
    pub substitutable_classes: BTreeSet<EntityClass>,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy { copies_per_sentence: 1, seed: 0, substitutable_classes: EntityClass::ALL.into_iter().collect() }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.copies_per_sentence == 0 {
            return Err(AugmentError::NoCopies);
        }
        Ok(())
    }
}

/// What one augmentation did.
#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub span: EntitySpan,
    pub original_id: String,
    pub replacement_id: String,
    pub sentence: Sentence,
}

/// Augmentation with the chosen span and entities reported.
pub fn augment_sentence_traced(
    sentence: &Sentence,
    kb: &KnowledgeBase,
    rng: &mut impl Rng,
    policy: &AugmentPolicy,
) -> Option<Substitution> {
    let spans = tags_to_spans(sentence.tags()?).ok()?;
    let options: Vec<(EntitySpan, String, Vec<String>)> = spans
        .into_iter()
        .filter(|s| policy.substitutable_classes.contains(&s.class))
        .filter_map(|s| {
            let id = link(&sentence.tokens()[s.start..s.end], kb)?;
            let candidates = same_type_candidates(&id, kb).ok()?;
            (!candidates.is_empty()).then_some((s, id, candidates))
        })
        .collect();
    if options.is_empty() {
        return None;
    }
    let (span, original_id, candidates) = &options[rng.gen_range(0..options.len())];
    let replacement_id = candidates[rng.gen_range(0..candidates.len())].clone();
    let name = &kb.get(&replacement_id).expect("candidate from index").canonical_name;
    let sentence = substitute(sentence, *span, name).expect("span came from the sentence");
    Some(Substitution { span: *span, original_id: original_id.clone(), replacement_id, sentence })
}

/// One augmented copy of `sentence`, or `None` when no substitutable
/// mention links to an entity that has a same-type alternative.
pub fn augment_sentence(
    sentence: &Sentence,
    kb: &KnowledgeBase,
    rng: &mut impl Rng,
    policy: &AugmentPolicy,
) -> Option<Sentence> {
    augment_sentence_traced(sentence, kb, rng, policy).map(|s| s.sentence)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentStats {
    /// Sentences considered.
    pub attempted: usize,
    /// Augmented sentences written.
    pub produced: usize,
    /// Sentences without any substitutable linked mention.
    pub skipped_unlinkable: usize,
}

/// Random stream for sentence `index`; independent of processing order.
pub fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Augmented copies only (originals are not included), ids suffixed
/// `-aug<k>`. Sentences without an id are named `sent-<index>` first.
pub fn augment_corpus(corpus: &Corpus, kb: &KnowledgeBase, policy: &AugmentPolicy) -> Result<Corpus, AugmentError> {
    augment_corpus_with_stats(corpus, kb, policy).map(|(c, _)| c)
}

pub fn augment_corpus_with_stats(
    corpus: &Corpus,
    kb: &KnowledgeBase,
    policy: &AugmentPolicy,
) -> Result<(Corpus, AugmentStats), AugmentError> {
    policy.validate()?;
    let per_sentence: Vec<Vec<Sentence>> = corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(index, sentence)| {
            let mut rng = sentence_rng(policy.seed, index);
            let base = sentence.id().map_or_else(|| format!("sent-{index}"), String::from);
            (1..=policy.copies_per_sentence)
                .filter_map(|k| {
                    let mut out = augment_sentence(sentence, kb, &mut rng, policy)?;
                    out.set_id(Some(format!("{base}-aug{k}")));
                    Some(out)
                })
                .collect()
        })
        .collect();
    let stats = AugmentStats {
        attempted: corpus.len(),
        produced: per_sentence.iter().map(Vec::len).sum(),
        skipped_unlinkable: per_sentence.iter().filter(|v| v.is_empty()).count(),
    };
    Ok((per_sentence.into_iter().flatten().collect(), stats))
}
