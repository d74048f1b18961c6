//! Column text format: one token per line, tag in the last column, blank
//! lines between sentences and `#` comments ahead of a sentence.
//!
//! ```text
//! # id train-17
//! The          O
//! Ssangyong    B-CORP
//! Engineering  I-CORP
//! ```
//!
//! A leading comment of the form `# id <value>` names the sentence. Comments
//! are only recognised before the first token of a sentence; a line starting
//! with `#` followed by a tab is always a token line.

use std::fmt::Write as _;

use super::{BioTag, Corpus, CorpusError, Sentence};

/// A parsed corpus together with the 1-based source line of every token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedCorpus {
    pub corpus: Corpus,
    pub token_lines: Vec<Vec<usize>>,
}

#[derive(Default)]
struct Block {
    id: Option<String>,
    seen_comment: bool,
    tokens: Vec<String>,
    tags: Vec<BioTag>,
    lines: Vec<usize>,
    tagged: Option<bool>,
}

impl Block {
    fn flush(&mut self, out: &mut LocatedCorpus) {
        let block = std::mem::take(self);
        if block.tokens.is_empty() {
            return;
        }
        let tags = if block.tagged == Some(true) { Some(block.tags) } else { None };
        // Token and tag invariants were checked line by line.
        let mut sentence = Sentence::new(block.tokens, tags).expect("block invariants checked while parsing");
        sentence.set_id(block.id);
        out.corpus.sentences.push(sentence);
        out.token_lines.push(block.lines);
    }
}

pub fn parse_conll(text: &str) -> Result<Corpus, CorpusError> {
    parse_conll_located(text).map(|located| located.corpus)
}

pub fn parse_conll_located(text: &str) -> Result<LocatedCorpus, CorpusError> {
    let mut out = LocatedCorpus { corpus: Corpus::default(), token_lines: Vec::new() };
    let mut block = Block::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            block.flush(&mut out);
            continue;
        }
        if block.tokens.is_empty() && line.starts_with('#') && !line.starts_with("#\t") {
            if !block.seen_comment {
                let mut words = line[1..].split_whitespace();
                if let (Some("id"), Some(value)) = (words.next(), words.next()) {
                    block.id = Some(value.to_string());
                }
                block.seen_comment = true;
            }
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            return Err(CorpusError::EmptyToken { line: line_no });
        }

        let columns: Vec<&str> = line.split_whitespace().collect();
        let tagged = columns.len() >= 2;
        match block.tagged {
            Some(prev) if prev != tagged => return Err(CorpusError::MixedAnnotation { line: line_no }),
            _ => block.tagged = Some(tagged),
        }
        if tagged {
            let raw_tag = columns[columns.len() - 1];
            let tag = raw_tag
                .parse::<BioTag>()
                .map_err(|_| CorpusError::UnknownTagAt { tag: raw_tag.to_string(), line: line_no })?;
            block.tags.push(tag);
        }
        block.tokens.push(columns[0].to_string());
        block.lines.push(line_no);
    }
    block.flush(&mut out);
    Ok(out)
}

/// Canonical text form; [`parse_conll`] inverts it.
pub fn serialize_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sentence in corpus {
        if let Some(id) = sentence.id() {
            let _ = writeln!(out, "# id {id}");
        }
        match sentence.tags() {
            Some(tags) => {
                for (token, tag) in sentence.tokens().iter().zip(tags) {
                    let _ = writeln!(out, "{token}\t{tag}");
                }
            }
            None => {
                for token in sentence.tokens() {
                    out.push_str(token);
                    out.push('\n');
                }
            }
        }
        out.push('\n');
    }
    out
}
