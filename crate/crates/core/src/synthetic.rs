//! Small templated corpora and matching knowledge bases for demos and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BioTag, Corpus, EntityClass, Sentence};

const TEMPLATES: &[&str] = &[
    "{PER} was born in {LOC} .",
    "the main contractor was {CORP} .",
    "{CORP} released {PROD} last spring .",
    "{GRP} performed {CW} in {LOC} .",
    "{PER} joined {GRP} after reading {CW} .",
    "critics compared {CW} with {PROD} .",
    "shares of {CORP} rose after {PER} spoke .",
    "{PER} moved from {LOC} to {LOC} .",
];

fn fillers(class: EntityClass) -> &'static [&'static str] {
    match class {
        EntityClass::Person => &["Ada Lovelace", "Nikola Tesla", "Marie Curie", "Alan Turing", "Grace Hopper"],
        EntityClass::Location => &["Seoul", "Buenos Aires", "Lake Baikal", "Kyoto", "Nairobi"],
        EntityClass::Group => &["The Beatles", "Arctic Monkeys", "Vienna Philharmonic", "Wu-Tang Clan"],
        EntityClass::Corporation => {
            &["Ssangyong Engineering and Construction", "Yazd Tire", "Hyundai Heavy Industries", "Nokia", "Tata Steel"]
        }
        EntityClass::Product => &["Walkman", "Game Boy Color", "Model T", "iPod Nano"],
        EntityClass::CreativeWork => &["Saving Private Ryan", "To Build a Fire", "I Capture the Castle", "Dune"],
    }
}

fn class_of(slot: &str) -> EntityClass {
    slot.trim_matches(|c| c == '{' || c == '}').parse().expect("template slot names a class")
}

/// `n` sentences drawn from fixed templates with random entity fillers.
pub fn templated_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let template = TEMPLATES[i % TEMPLATES.len()];
            let mut tokens = Vec::new();
            let mut tags = Vec::new();
            for word in template.split(' ') {
                if word.starts_with('{') {
                    let class = class_of(word);
                    let name = fillers(class).choose(&mut rng).expect("non-empty fillers");
                    for (k, tok) in name.split(' ').enumerate() {
                        tokens.push(tok.to_string());
                        tags.push(if k == 0 { BioTag::B(class) } else { BioTag::I(class) });
                    }
                } else {
                    tokens.push(word.to_string());
                    tags.push(BioTag::O);
                }
            }
            Sentence::new(tokens, Some(tags)).expect("templates are non-empty").with_id(format!("syn-{i}"))
        })
        .collect()
}

/// Knowledge-base text listing every filler, typed by a per-class label.
/// Some fillers also get a random alias.
pub fn filler_kb(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("# id\tname\ttype\taliases\n");
    let mut next = 1;
    for class in EntityClass::ALL {
        for name in fillers(class) {
            let alias = if rng.gen_bool(0.3) {
                format!("{} Alias", name.split(' ').next().unwrap_or(name))
            } else {
                String::new()
            };
            out.push_str(&format!("Q{next}\t{name}\t{}\t{alias}\n", kb_type(class)));
            next += 1;
        }
    }
    out
}

fn kb_type(class: EntityClass) -> &'static str {
    match class {
        EntityClass::Person => "human",
        EntityClass::Location => "geographic entity",
        EntityClass::Group => "musical group",
        EntityClass::Corporation => "corporation",
        EntityClass::Product => "product",
        EntityClass::CreativeWork => "creative work",
    }
}
