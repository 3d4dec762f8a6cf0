//! Parse a review dump, show what was dropped and why, then apply the
//! optional preprocessing.
//!
//!     cargo run --example ingest_corpus [path/to/reviews.jsonl]

use std::path::PathBuf;

use opinionforge::ingest::{parse_reviews_file, FieldNames, PreprocessOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/edge_cases.jsonl")
    });
    let corpus = parse_reviews_file(&path, None, &FieldNames::default())?;
    println!("{corpus}");
    for r in &corpus.rejections {
        println!("  line {:>3} rejected: {}", r.source_line, r.reason);
    }
    for review in &corpus.reviews {
        println!("  [{}] {}* {}", review.id, review.rating, review.text);
    }

    let (processed, emptied) = corpus.preprocessed(PreprocessOptions::all());
    println!("\nafter stopwords/symbols/stemming ({emptied} emptied):");
    for review in &processed.reviews {
        println!("  {}* {}", review.rating, review.text);
    }
    Ok(())
}
