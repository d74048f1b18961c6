//! Word-level vocabulary built from training sentences.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Corpus;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Lowercased word types; `<pad>` is id 0 and `<unk>` id 1, the rest sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build(corpus: &Corpus) -> Self {
        let types: BTreeSet<String> = corpus
            .iter()
            .flat_map(|s| s.tokens().iter().map(|t| normalize(t)))
            .filter(|t| t != PAD && t != UNK)
            .collect();
        let words = [PAD.to_string(), UNK.to_string()].into_iter().chain(types).collect();
        Vocabulary::from_words(words)
    }

    /// Rebuilds from a stored word list. The first two entries must be the
    /// reserved pad and unknown symbols.
    pub fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary { words, index }
    }

    pub fn is_well_formed(&self) -> bool {
        self.words.len() >= 2
            && self.words[PAD_ID] == PAD
            && self.words[UNK_ID] == UNK
            && self.index.len() == self.words.len()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(&normalize(token)).copied().unwrap_or(UNK_ID)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

fn normalize(token: &str) -> String {
    token.to_lowercase()
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.words.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Vocabulary::from_words(Vec::deserialize(deserializer)?))
    }
}
