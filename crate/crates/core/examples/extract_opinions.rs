//! Ask every aspect question of every review and group the answers.
//!
//!     cargo run --example extract_opinions

use std::path::PathBuf;

use opinionforge::condense::{group_reviews, GroupingMode};
use opinionforge::ingest::{parse_reviews_file, FieldNames};
use opinionforge::mrc::{extract_opinions, ExtractOptions};
use opinionforge::{default_aspects, generate_questions, MockBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let corpus = parse_reviews_file(fixtures.join("messy.jsonl"), None, &FieldNames::default())?;
    let backend = MockBackend::new(7).with_fixtures_file(fixtures.join("qa_fixtures.json"))?;

    let aspects = default_aspects();
    let queries = generate_questions(&aspects)?;
    let options = ExtractOptions {
        min_confidence: 0.05,
        ..ExtractOptions::default()
    };
    let extraction = extract_opinions(&corpus, &queries, &backend, &options)?;
    println!(
        "{} spans kept from {} question/review pairs ({} errors)",
        extraction.spans.len(),
        extraction.pairs,
        extraction.errors.len()
    );
    for span in extraction.spans.iter().take(8) {
        println!("  {:<16} {:.3} {:?}", span.aspect_key, span.confidence, span.text);
    }

    for group in group_reviews(&corpus, Some(&extraction.spans), GroupingMode::Aspect, &aspects) {
        println!("{:<28} {} spans from {} reviews", group.key.to_string(), group.sources.len(), group.source_review_ids.len());
    }
    Ok(())
}
