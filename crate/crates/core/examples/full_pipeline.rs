//! Run the whole pipeline on the bundled corpus with the mock backend and
//! print the report table.
//!
//!     cargo run --example full_pipeline [output_dir]

use std::path::PathBuf;

use opinionforge::report::{to_markdown, ReportLabels};
use opinionforge::{run, RunConfig, SummarizerMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let output_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("opinionforge-example"));
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");

    let mut config = RunConfig {
        input_path: Some(fixtures.join("reviews.jsonl")),
        aspects_path: Some(fixtures.join("aspects.txt")),
        summarizer_mode: SummarizerMode::Fused,
        output_dir: output_dir.clone(),
        seed: 7,
        ..RunConfig::default()
    };
    config.backend.fixtures_path = Some(fixtures.join("qa_fixtures.json"));

    let (report, manifest) = run(&config)?;
    let labels = ReportLabels {
        opinion_extraction: config.opinion_extraction,
        model: config.summarizer_mode.label().into(),
    };
    print!("{}", to_markdown(&report, &labels));
    println!();
    for stage in &manifest.stages {
        println!("{:<16} {:>5} ms {} errors", stage.name, stage.millis, stage.errors.len());
    }
    println!("artifacts in {}: {}", output_dir.display(), manifest.artifacts.join(", "));
    Ok(())
}
