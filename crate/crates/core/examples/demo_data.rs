//! Writes a small templated train/dev corpus and a matching knowledge base.
//!
//! ```text
//! cargo run -p nerkit --example demo_data -- data/
//! ```

use std::path::PathBuf;

use nerkit::corpus::serialize_conll;
use nerkit::synthetic::{filler_kb, templated_corpus};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("train.conll"), serialize_conll(&templated_corpus(32, 2022)))?;
    std::fs::write(dir.join("dev.conll"), serialize_conll(&templated_corpus(16, 7)))?;
    std::fs::write(dir.join("kb.tsv"), filler_kb(1))?;
    Ok(())
}
